#pragma once

#include <cstdint>
#include <vector>

#include "nmc/rng.hpp"
#include "nmc/tensor.hpp"

// Forward ops with recorded backward closures. All activations are 2-D
// [rows, features]; sequence data is laid out as [batch * seq_len, hidden]
// and the attention op carries the (batch, seq_len, heads) geometry itself.
// Reductions accumulate in double. Every op validates shapes and checks its
// output for non-finite values, throwing op_error.
namespace nmc {

TensorPtr matmul(Graph& g, const TensorPtr& a, const TensorPtr& b);

// Same-shape addition, or bias broadcast when b is rank 1 and matches a's
// trailing dimension.
TensorPtr add(Graph& g, const TensorPtr& a, const TensorPtr& b);

TensorPtr mul(Graph& g, const TensorPtr& a, const TensorPtr& b);

TensorPtr sum(Graph& g, const TensorPtr& a);

// table is [vocab, hidden]; also serves as a row gather when `table` is an
// activation (used to pull per-sequence feature rows out of a batch).
TensorPtr embedding_lookup(Graph& g, const TensorPtr& table,
                           const std::vector<int32_t>& ids);

TensorPtr layer_norm(Graph& g, const TensorPtr& x, const TensorPtr& gamma,
                     const TensorPtr& beta, float eps = 1e-5f);

TensorPtr gelu(Graph& g, const TensorPtr& x);

TensorPtr tanh_op(Graph& g, const TensorPtr& x);

// Over the last dimension.
TensorPtr softmax(Graph& g, const TensorPtr& x);

// Inverted dropout; identity (the same tensor) when not training or rate 0.
TensorPtr dropout(Graph& g, const TensorPtr& x, float rate, Rng& rng,
                  bool training);

// q, k, v are [batch * seq_len, hidden]; key_mask holds one 0/1 entry per
// position and masked keys receive -1e9 before the row softmax. Attention
// probabilities get dropout when training.
TensorPtr scaled_dot_product_attention(Graph& g, const TensorPtr& q,
                                       const TensorPtr& k, const TensorPtr& v,
                                       const std::vector<int32_t>& key_mask,
                                       size_t batch, size_t seq_len,
                                       size_t n_heads, float attn_dropout,
                                       Rng& rng, bool training);

// Mean negative log-likelihood over rows whose target is not -1. When
// class_weights is nonempty (one weight per class) each row's loss is
// scaled by its target's weight and the mean divides by the summed weights.
TensorPtr cross_entropy(Graph& g, const TensorPtr& logits,
                        const std::vector<int32_t>& targets,
                        const std::vector<float>& class_weights = {});

}  // namespace nmc

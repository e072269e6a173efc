#include "nmc/ops.hpp"

#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include "nmc/error.hpp"

namespace nmc {

namespace {

void check_finite(const TensorPtr& t, const char* op) {
  for (float v : t->data)
    if (!std::isfinite(v))
      throw op_error(std::string(op) + " produced a non-finite value");
}

bool wants_grad(Graph& g, std::initializer_list<TensorPtr> inputs) {
  if (!g.grad_enabled()) return false;
  for (const TensorPtr& t : inputs)
    if (t->requires_grad) return true;
  return false;
}

void require_rank(const TensorPtr& t, size_t rank, const char* op) {
  if (t->shape.size() != rank)
    throw op_error(std::string(op) + ": expected rank " +
                   std::to_string(rank) + " tensor, got " +
                   shape_str(t->shape));
}

}  // namespace

TensorPtr matmul(Graph& g, const TensorPtr& a, const TensorPtr& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a->shape[1] != b->shape[0])
    throw op_error("matmul: inner dimensions disagree, " +
                   shape_str(a->shape) + " x " + shape_str(b->shape));
  const size_t m = a->shape[0], kk = a->shape[1], n = b->shape[1];
  const bool rec = wants_grad(g, {a, b});
  TensorPtr out = g.make({m, n}, rec);

  std::vector<double> acc(n);
  for (size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (size_t k = 0; k < kk; ++k) {
      const double av = a->data[i * kk + k];
      const float* brow = b->data.data() + k * n;
      for (size_t j = 0; j < n; ++j) acc[j] += av * brow[j];
    }
    for (size_t j = 0; j < n; ++j)
      out->data[i * n + j] = static_cast<float>(acc[j]);
  }
  check_finite(out, "matmul");

  if (rec) {
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    g.record([a, b, out, m, kk, n] {
      if (a->requires_grad) {
        for (size_t i = 0; i < m; ++i)
          for (size_t k = 0; k < kk; ++k) {
            double s = 0.0;
            const float* drow = out->grad.data() + i * n;
            const float* brow = b->data.data() + k * n;
            for (size_t j = 0; j < n; ++j) s += double(drow[j]) * brow[j];
            a->grad[i * kk + k] += static_cast<float>(s);
          }
      }
      if (b->requires_grad) {
        std::vector<double> acc(n);
        for (size_t k = 0; k < kk; ++k) {
          std::fill(acc.begin(), acc.end(), 0.0);
          for (size_t i = 0; i < m; ++i) {
            const double av = a->data[i * kk + k];
            const float* drow = out->grad.data() + i * n;
            for (size_t j = 0; j < n; ++j) acc[j] += av * drow[j];
          }
          for (size_t j = 0; j < n; ++j)
            b->grad[k * n + j] += static_cast<float>(acc[j]);
        }
      }
    });
  }
  return out;
}

TensorPtr add(Graph& g, const TensorPtr& a, const TensorPtr& b) {
  const bool bias = b->shape.size() == 1 && a->shape.size() >= 1 &&
                    a->shape.back() == b->shape[0] && a->shape != b->shape;
  if (!bias && a->shape != b->shape)
    throw op_error("add: shape mismatch " + shape_str(a->shape) + " vs " +
                   shape_str(b->shape));
  const bool rec = wants_grad(g, {a, b});
  TensorPtr out = g.make(a->shape, rec);
  const size_t n = bias ? b->shape[0] : 0;
  if (bias) {
    for (size_t i = 0; i < a->data.size(); ++i)
      out->data[i] = a->data[i] + b->data[i % n];
  } else {
    for (size_t i = 0; i < a->data.size(); ++i)
      out->data[i] = a->data[i] + b->data[i];
  }
  check_finite(out, "add");

  if (rec) {
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    g.record([a, b, out, bias, n] {
      if (a->requires_grad)
        for (size_t i = 0; i < a->grad.size(); ++i)
          a->grad[i] += out->grad[i];
      if (b->requires_grad) {
        if (bias) {
          std::vector<double> acc(n, 0.0);
          for (size_t i = 0; i < out->grad.size(); ++i)
            acc[i % n] += out->grad[i];
          for (size_t j = 0; j < n; ++j)
            b->grad[j] += static_cast<float>(acc[j]);
        } else {
          for (size_t i = 0; i < b->grad.size(); ++i)
            b->grad[i] += out->grad[i];
        }
      }
    });
  }
  return out;
}

TensorPtr mul(Graph& g, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape)
    throw op_error("mul: shape mismatch " + shape_str(a->shape) + " vs " +
                   shape_str(b->shape));
  const bool rec = wants_grad(g, {a, b});
  TensorPtr out = g.make(a->shape, rec);
  for (size_t i = 0; i < a->data.size(); ++i)
    out->data[i] = a->data[i] * b->data[i];
  check_finite(out, "mul");

  if (rec) {
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    g.record([a, b, out] {
      if (a->requires_grad)
        for (size_t i = 0; i < a->grad.size(); ++i)
          a->grad[i] += out->grad[i] * b->data[i];
      if (b->requires_grad)
        for (size_t i = 0; i < b->grad.size(); ++i)
          b->grad[i] += out->grad[i] * a->data[i];
    });
  }
  return out;
}

TensorPtr sum(Graph& g, const TensorPtr& a) {
  const bool rec = wants_grad(g, {a});
  TensorPtr out = g.make({1}, rec);
  double s = 0.0;
  for (float v : a->data) s += v;
  out->data[0] = static_cast<float>(s);
  check_finite(out, "sum");

  if (rec) {
    a->ensure_grad();
    g.record([a, out] {
      const float d = out->grad[0];
      for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += d;
    });
  }
  return out;
}

TensorPtr embedding_lookup(Graph& g, const TensorPtr& table,
                           const std::vector<int32_t>& ids) {
  require_rank(table, 2, "embedding_lookup");
  const size_t vocab = table->shape[0], hidden = table->shape[1];
  for (int32_t id : ids)
    if (id < 0 || static_cast<size_t>(id) >= vocab)
      throw op_error("embedding_lookup: id " + std::to_string(id) +
                     " outside table of " + std::to_string(vocab) + " rows");
  const bool rec = wants_grad(g, {table});
  TensorPtr out = g.make({ids.size(), hidden}, rec);
  for (size_t i = 0; i < ids.size(); ++i)
    std::memcpy(out->data.data() + i * hidden,
                table->data.data() + static_cast<size_t>(ids[i]) * hidden,
                hidden * sizeof(float));
  check_finite(out, "embedding_lookup");

  if (rec) {
    table->ensure_grad();
    g.record([table, out, ids, hidden] {
      for (size_t i = 0; i < ids.size(); ++i) {
        float* dst = table->grad.data() + static_cast<size_t>(ids[i]) * hidden;
        const float* src = out->grad.data() + i * hidden;
        for (size_t j = 0; j < hidden; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

TensorPtr layer_norm(Graph& g, const TensorPtr& x, const TensorPtr& gamma,
                     const TensorPtr& beta, float eps) {
  require_rank(x, 2, "layer_norm");
  require_rank(gamma, 1, "layer_norm");
  require_rank(beta, 1, "layer_norm");
  const size_t rows = x->shape[0], h = x->shape[1];
  if (gamma->shape[0] != h || beta->shape[0] != h)
    throw op_error("layer_norm: scale/shift length " +
                   shape_str(gamma->shape) + "/" + shape_str(beta->shape) +
                   " does not match feature size " + std::to_string(h));
  const bool rec = wants_grad(g, {x, gamma, beta});
  TensorPtr out = g.make(x->shape, rec);

  auto xhat = std::make_shared<std::vector<float>>(rows * h);
  auto inv_std = std::make_shared<std::vector<float>>(rows);
  for (size_t i = 0; i < rows; ++i) {
    const float* row = x->data.data() + i * h;
    double mean = 0.0;
    for (size_t j = 0; j < h; ++j) mean += row[j];
    mean /= double(h);
    double var = 0.0;
    for (size_t j = 0; j < h; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= double(h);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = static_cast<float>(inv);
    for (size_t j = 0; j < h; ++j) {
      const float xh = static_cast<float>((row[j] - mean) * inv);
      (*xhat)[i * h + j] = xh;
      out->data[i * h + j] = gamma->data[j] * xh + beta->data[j];
    }
  }
  check_finite(out, "layer_norm");

  if (rec) {
    if (x->requires_grad) x->ensure_grad();
    if (gamma->requires_grad) gamma->ensure_grad();
    if (beta->requires_grad) beta->ensure_grad();
    g.record([x, gamma, beta, out, xhat, inv_std, rows, h] {
      std::vector<double> dgamma(h, 0.0), dbeta(h, 0.0);
      for (size_t i = 0; i < rows; ++i) {
        const float* dy = out->grad.data() + i * h;
        const float* xh = xhat->data() + i * h;
        if (x->requires_grad) {
          double m1 = 0.0, m2 = 0.0;
          for (size_t j = 0; j < h; ++j) {
            const double dyh = double(dy[j]) * gamma->data[j];
            m1 += dyh;
            m2 += dyh * xh[j];
          }
          m1 /= double(h);
          m2 /= double(h);
          const double inv = (*inv_std)[i];
          for (size_t j = 0; j < h; ++j) {
            const double dyh = double(dy[j]) * gamma->data[j];
            x->grad[i * h + j] +=
                static_cast<float>(inv * (dyh - m1 - double(xh[j]) * m2));
          }
        }
        for (size_t j = 0; j < h; ++j) {
          dgamma[j] += double(dy[j]) * xh[j];
          dbeta[j] += dy[j];
        }
      }
      if (gamma->requires_grad)
        for (size_t j = 0; j < h; ++j)
          gamma->grad[j] += static_cast<float>(dgamma[j]);
      if (beta->requires_grad)
        for (size_t j = 0; j < h; ++j)
          beta->grad[j] += static_cast<float>(dbeta[j]);
    });
  }
  return out;
}

namespace {
constexpr double kGeluC1 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC2 = 0.044715;
}  // namespace

TensorPtr gelu(Graph& g, const TensorPtr& x) {
  const bool rec = wants_grad(g, {x});
  TensorPtr out = g.make(x->shape, rec);
  for (size_t i = 0; i < x->data.size(); ++i) {
    const double v = x->data[i];
    const double u = kGeluC1 * (v + kGeluC2 * v * v * v);
    out->data[i] = static_cast<float>(0.5 * v * (1.0 + std::tanh(u)));
  }
  check_finite(out, "gelu");

  if (rec) {
    x->ensure_grad();
    g.record([x, out] {
      for (size_t i = 0; i < x->data.size(); ++i) {
        const double v = x->data[i];
        const double u = kGeluC1 * (v + kGeluC2 * v * v * v);
        const double t = std::tanh(u);
        const double du = kGeluC1 * (1.0 + 3.0 * kGeluC2 * v * v);
        const double dgelu = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
        x->grad[i] += static_cast<float>(double(out->grad[i]) * dgelu);
      }
    });
  }
  return out;
}

TensorPtr tanh_op(Graph& g, const TensorPtr& x) {
  const bool rec = wants_grad(g, {x});
  TensorPtr out = g.make(x->shape, rec);
  for (size_t i = 0; i < x->data.size(); ++i)
    out->data[i] = std::tanh(x->data[i]);
  check_finite(out, "tanh");

  if (rec) {
    x->ensure_grad();
    g.record([x, out] {
      for (size_t i = 0; i < x->data.size(); ++i) {
        const float y = out->data[i];
        x->grad[i] += out->grad[i] * (1.0f - y * y);
      }
    });
  }
  return out;
}

TensorPtr softmax(Graph& g, const TensorPtr& x) {
  if (x->shape.empty())
    throw op_error("softmax: scalar input " + shape_str(x->shape));
  const size_t n = x->shape.back();
  const size_t rows = x->numel() / n;
  const bool rec = wants_grad(g, {x});
  TensorPtr out = g.make(x->shape, rec);
  for (size_t i = 0; i < rows; ++i) {
    const float* row = x->data.data() + i * n;
    float* yrow = out->data.data() + i * n;
    double mx = row[0];
    for (size_t j = 1; j < n; ++j) mx = std::max(mx, double(row[j]));
    double s = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const double e = std::exp(double(row[j]) - mx);
      yrow[j] = static_cast<float>(e);
      s += e;
    }
    for (size_t j = 0; j < n; ++j)
      yrow[j] = static_cast<float>(yrow[j] / s);
  }
  check_finite(out, "softmax");

  if (rec) {
    x->ensure_grad();
    g.record([x, out, rows, n] {
      for (size_t i = 0; i < rows; ++i) {
        const float* y = out->data.data() + i * n;
        const float* dy = out->grad.data() + i * n;
        double dot = 0.0;
        for (size_t j = 0; j < n; ++j) dot += double(dy[j]) * y[j];
        for (size_t j = 0; j < n; ++j)
          x->grad[i * n + j] +=
              static_cast<float>(double(y[j]) * (double(dy[j]) - dot));
      }
    });
  }
  return out;
}

TensorPtr dropout(Graph& g, const TensorPtr& x, float rate, Rng& rng,
                  bool training) {
  if (rate < 0.0f || rate >= 1.0f)
    throw op_error("dropout: rate must be in [0,1), got " +
                   std::to_string(rate));
  if (!training || rate == 0.0f) return x;

  const bool rec = wants_grad(g, {x});
  TensorPtr out = g.make(x->shape, rec);
  auto keep = std::make_shared<std::vector<char>>(x->data.size());
  const float scale = 1.0f / (1.0f - rate);
  for (size_t i = 0; i < x->data.size(); ++i) {
    const bool k = rng.uniform() >= rate;
    (*keep)[i] = k;
    out->data[i] = k ? x->data[i] * scale : 0.0f;
  }
  check_finite(out, "dropout");

  if (rec) {
    x->ensure_grad();
    g.record([x, out, keep, scale] {
      for (size_t i = 0; i < x->data.size(); ++i)
        if ((*keep)[i]) x->grad[i] += out->grad[i] * scale;
    });
  }
  return out;
}

TensorPtr scaled_dot_product_attention(Graph& g, const TensorPtr& q,
                                       const TensorPtr& k, const TensorPtr& v,
                                       const std::vector<int32_t>& key_mask,
                                       size_t batch, size_t seq_len,
                                       size_t n_heads, float attn_dropout,
                                       Rng& rng, bool training) {
  require_rank(q, 2, "attention");
  if (q->shape != k->shape || q->shape != v->shape)
    throw op_error("attention: q/k/v shapes disagree, " + shape_str(q->shape) +
                   " " + shape_str(k->shape) + " " + shape_str(v->shape));
  const size_t rows = q->shape[0], hidden = q->shape[1];
  if (rows != batch * seq_len)
    throw op_error("attention: " + std::to_string(rows) + " rows but batch " +
                   std::to_string(batch) + " x seq_len " +
                   std::to_string(seq_len));
  if (n_heads == 0 || hidden % n_heads != 0)
    throw op_error("attention: hidden " + std::to_string(hidden) +
                   " not divisible by " + std::to_string(n_heads) + " heads");
  if (key_mask.size() != rows)
    throw op_error("attention: key mask has " +
                   std::to_string(key_mask.size()) + " entries for " +
                   std::to_string(rows) + " rows");
  if (attn_dropout < 0.0f || attn_dropout >= 1.0f)
    throw op_error("attention: dropout rate must be in [0,1), got " +
                   std::to_string(attn_dropout));

  const size_t d = hidden / n_heads;
  const double scl = 1.0 / std::sqrt(double(d));
  const bool drop = training && attn_dropout > 0.0f;
  const float keep_scale = drop ? 1.0f / (1.0f - attn_dropout) : 1.0f;
  const bool rec = wants_grad(g, {q, k, v});
  TensorPtr out = g.make(q->shape, rec);

  const size_t plane = seq_len * seq_len;
  auto probs = std::make_shared<std::vector<float>>(batch * n_heads * plane);
  auto keep = std::make_shared<std::vector<char>>(
      drop ? batch * n_heads * plane : size_t{0}, char{1});

  std::vector<double> srow(seq_len);
  std::vector<double> acc(d);
  for (size_t b = 0; b < batch; ++b) {
    for (size_t h = 0; h < n_heads; ++h) {
      const size_t col = h * d;
      float* pplane = probs->data() + (b * n_heads + h) * plane;
      char* kplane = drop ? keep->data() + (b * n_heads + h) * plane : nullptr;
      for (size_t t1 = 0; t1 < seq_len; ++t1) {
        const float* qrow = q->data.data() + (b * seq_len + t1) * hidden + col;
        double mx = -1e300;
        for (size_t t2 = 0; t2 < seq_len; ++t2) {
          const float* krow =
              k->data.data() + (b * seq_len + t2) * hidden + col;
          double s = 0.0;
          for (size_t j = 0; j < d; ++j) s += double(qrow[j]) * krow[j];
          s *= scl;
          if (key_mask[b * seq_len + t2] == 0) s += -1e9;
          srow[t2] = s;
          mx = std::max(mx, s);
        }
        double z = 0.0;
        for (size_t t2 = 0; t2 < seq_len; ++t2) {
          srow[t2] = std::exp(srow[t2] - mx);
          z += srow[t2];
        }
        float* prow = pplane + t1 * seq_len;
        for (size_t t2 = 0; t2 < seq_len; ++t2)
          prow[t2] = static_cast<float>(srow[t2] / z);
        if (drop) {
          char* krow2 = kplane + t1 * seq_len;
          for (size_t t2 = 0; t2 < seq_len; ++t2)
            krow2[t2] = rng.uniform() >= attn_dropout;
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        for (size_t t2 = 0; t2 < seq_len; ++t2) {
          float p = prow[t2];
          if (drop) p = kplane[t1 * seq_len + t2] ? p * keep_scale : 0.0f;
          if (p == 0.0f) continue;
          const float* vrow =
              v->data.data() + (b * seq_len + t2) * hidden + col;
          for (size_t j = 0; j < d; ++j) acc[j] += double(p) * vrow[j];
        }
        float* orow = out->data.data() + (b * seq_len + t1) * hidden + col;
        for (size_t j = 0; j < d; ++j) orow[j] = static_cast<float>(acc[j]);
      }
    }
  }
  check_finite(out, "attention");

  if (rec) {
    if (q->requires_grad) q->ensure_grad();
    if (k->requires_grad) k->ensure_grad();
    if (v->requires_grad) v->ensure_grad();
    g.record([q, k, v, out, probs, keep, batch, seq_len, n_heads, d, hidden,
              scl, drop, keep_scale] {
      const size_t plane = seq_len * seq_len;
      std::vector<double> dp(seq_len);
      std::vector<double> ds(seq_len);
      for (size_t b = 0; b < batch; ++b) {
        for (size_t h = 0; h < n_heads; ++h) {
          const size_t col = h * d;
          const float* pplane = probs->data() + (b * n_heads + h) * plane;
          const char* kplane =
              drop ? keep->data() + (b * n_heads + h) * plane : nullptr;
          for (size_t t1 = 0; t1 < seq_len; ++t1) {
            const float* dout =
                out->grad.data() + (b * seq_len + t1) * hidden + col;
            const float* prow = pplane + t1 * seq_len;
            // d(dropped probs) and dV.
            for (size_t t2 = 0; t2 < seq_len; ++t2) {
              const float* vrow =
                  v->data.data() + (b * seq_len + t2) * hidden + col;
              double s = 0.0;
              for (size_t j = 0; j < d; ++j) s += double(dout[j]) * vrow[j];
              float pd = prow[t2];
              if (drop)
                pd = kplane[t1 * seq_len + t2] ? pd * keep_scale : 0.0f;
              if (v->requires_grad && pd != 0.0f) {
                float* dv =
                    v->grad.data() + (b * seq_len + t2) * hidden + col;
                for (size_t j = 0; j < d; ++j)
                  dv[j] += static_cast<float>(double(pd) * dout[j]);
              }
              if (drop)
                s = kplane[t1 * seq_len + t2] ? s * keep_scale : 0.0;
              dp[t2] = s;
            }
            // Softmax backward on the pre-dropout probabilities.
            double dot = 0.0;
            for (size_t t2 = 0; t2 < seq_len; ++t2)
              dot += dp[t2] * prow[t2];
            for (size_t t2 = 0; t2 < seq_len; ++t2)
              ds[t2] = double(prow[t2]) * (dp[t2] - dot);
            if (q->requires_grad) {
              float* dq = q->grad.data() + (b * seq_len + t1) * hidden + col;
              for (size_t j = 0; j < d; ++j) {
                double s = 0.0;
                for (size_t t2 = 0; t2 < seq_len; ++t2)
                  s += ds[t2] *
                       k->data[(b * seq_len + t2) * hidden + col + j];
                dq[j] += static_cast<float>(s * scl);
              }
            }
            if (k->requires_grad) {
              const float* qrow =
                  q->data.data() + (b * seq_len + t1) * hidden + col;
              for (size_t t2 = 0; t2 < seq_len; ++t2) {
                if (ds[t2] == 0.0) continue;
                float* dk =
                    k->grad.data() + (b * seq_len + t2) * hidden + col;
                const double w = ds[t2] * scl;
                for (size_t j = 0; j < d; ++j)
                  dk[j] += static_cast<float>(w * qrow[j]);
              }
            }
          }
        }
      }
    });
  }
  return out;
}

TensorPtr cross_entropy(Graph& g, const TensorPtr& logits,
                        const std::vector<int32_t>& targets,
                        const std::vector<float>& class_weights) {
  require_rank(logits, 2, "cross_entropy");
  const size_t n = logits->shape[0], c = logits->shape[1];
  if (targets.size() != n)
    throw op_error("cross_entropy: " + std::to_string(targets.size()) +
                   " targets for " + std::to_string(n) + " rows");
  if (!class_weights.empty() && class_weights.size() != c)
    throw op_error("cross_entropy: " + std::to_string(class_weights.size()) +
                   " class weights for " + std::to_string(c) + " classes");
  const bool weighted = !class_weights.empty();
  double weight_sum = 0.0;
  size_t selected = 0;
  for (int32_t t : targets) {
    if (t == -1) continue;
    if (t < 0 || static_cast<size_t>(t) >= c)
      throw op_error("cross_entropy: target " + std::to_string(t) +
                     " outside " + std::to_string(c) + " classes");
    ++selected;
    weight_sum += weighted ? class_weights[static_cast<size_t>(t)] : 1.0;
  }
  if (selected == 0)
    throw op_error("cross_entropy: every target is the ignore marker");
  if (weight_sum <= 0.0)
    throw op_error("cross_entropy: selected class weights sum to zero");

  const bool rec = wants_grad(g, {logits});
  TensorPtr out = g.make({1}, rec);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (targets[i] == -1) continue;
    const float* row = logits->data.data() + i * c;
    double mx = row[0];
    for (size_t j = 1; j < c; ++j) mx = std::max(mx, double(row[j]));
    double z = 0.0;
    for (size_t j = 0; j < c; ++j) z += std::exp(double(row[j]) - mx);
    const double w =
        weighted ? class_weights[static_cast<size_t>(targets[i])] : 1.0;
    total += w * (mx + std::log(z) - double(row[targets[i]]));
  }
  out->data[0] = static_cast<float>(total / weight_sum);
  check_finite(out, "cross_entropy");

  if (rec) {
    logits->ensure_grad();
    g.record([logits, out, targets, class_weights, weighted, n, c,
              weight_sum] {
      const double dscale = double(out->grad[0]) / weight_sum;
      for (size_t i = 0; i < n; ++i) {
        if (targets[i] == -1) continue;
        const float* row = logits->data.data() + i * c;
        double mx = row[0];
        for (size_t j = 1; j < c; ++j) mx = std::max(mx, double(row[j]));
        double z = 0.0;
        for (size_t j = 0; j < c; ++j) z += std::exp(double(row[j]) - mx);
        const double w =
            weighted ? class_weights[static_cast<size_t>(targets[i])] : 1.0;
        for (size_t j = 0; j < c; ++j) {
          const double p = std::exp(double(row[j]) - mx) / z;
          const double delta = j == static_cast<size_t>(targets[i]);
          logits->grad[i * c + j] +=
              static_cast<float>(w * (p - delta) * dscale);
        }
      }
    });
  }
  return out;
}

}  // namespace nmc

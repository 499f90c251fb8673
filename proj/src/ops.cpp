#include "absa/ops.hpp"

#include <algorithm>
#include <cmath>

namespace absa {

namespace {

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::active()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_out(const Shape& shape, bool rec) {
  Tensor out = Tensor::zeros(shape, rec);
  out.node()->leaf = false;
  return out;
}

void check_rank(const Tensor& t, int rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + " tensor, got shape " +
                     shape_str(t.shape()));
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

constexpr double kInvSqrt2Pi = 0.3989422804014327;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  bool rec = recording({&a, &b});
  Tensor out = make_out(a.shape(), rec);
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (rec) {
    auto an = a.handle(), bn = b.handle(), on = out.handle();
    Tape::active()->record(out, [an, bn, on] {
      if (an->requires_grad)
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          an->grad[i] += on->grad[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          bn->grad[i] += on->grad[i];
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  bool rec = recording({&a, &b});
  Tensor out = make_out(a.shape(), rec);
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  if (rec) {
    auto an = a.handle(), bn = b.handle(), on = out.handle();
    Tape::active()->record(out, [an, bn, on] {
      if (an->requires_grad)
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          an->grad[i] += on->grad[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          bn->grad[i] -= on->grad[i];
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  bool rec = recording({&a, &b});
  Tensor out = make_out(a.shape(), rec);
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (rec) {
    auto an = a.handle(), bn = b.handle(), on = out.handle();
    Tape::active()->record(out, [an, bn, on] {
      if (an->requires_grad)
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          an->grad[i] += on->grad[i] * bn->value[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          bn->grad[i] += on->grad[i] * an->value[i];
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) { return affine(a, c, 0.0); }

Tensor affine(const Tensor& a, double k, double c) {
  bool rec = recording({&a});
  Tensor out = make_out(a.shape(), rec);
  const auto& av = a.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = k * av[i] + c;
  if (rec) {
    auto an = a.handle(), on = out.handle();
    Tape::active()->record(out, [an, on, k] {
      for (std::size_t i = 0; i < on->grad.size(); ++i)
        an->grad[i] += k * on->grad[i];
    });
  }
  return out;
}

Tensor add_row_bias(const Tensor& m, const Tensor& v) {
  check_rank(m, 2, "add_row_bias");
  check_rank(v, 1, "add_row_bias");
  if (m.cols() != v.size()) {
    throw ShapeError("add_row_bias: shape mismatch " + shape_str(m.shape()) +
                     " vs " + shape_str(v.shape()));
  }
  bool rec = recording({&m, &v});
  Tensor out = make_out(m.shape(), rec);
  int rows = m.rows(), cols = m.cols();
  const auto& mv = m.data();
  const auto& vv = v.data();
  auto& ov = out.data();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      ov[static_cast<std::size_t>(i) * cols + j] =
          mv[static_cast<std::size_t>(i) * cols + j] + vv[j];
  if (rec) {
    auto mn = m.handle(), vn = v.handle(), on = out.handle();
    Tape::active()->record(out, [mn, vn, on, rows, cols] {
      if (mn->requires_grad)
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          mn->grad[i] += on->grad[i];
      if (vn->requires_grad)
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j)
            vn->grad[j] += on->grad[static_cast<std::size_t>(i) * cols + j];
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  int m = a.rows(), k = a.cols(), n = b.cols();
  bool rec = recording({&a, &b});
  Tensor out = make_out({m, n}, rec);
  const double* av = a.data().data();
  const double* bv = b.data().data();
  double* ov = out.data().data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      double av_ip = av[static_cast<std::size_t>(i) * k + p];
      const double* brow = bv + static_cast<std::size_t>(p) * n;
      double* orow = ov + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av_ip * brow[j];
    }
  }
  if (rec) {
    auto an = a.handle(), bn = b.handle(), on = out.handle();
    Tape::active()->record(out, [an, bn, on, m, k, n] {
      const double* g = on->grad.data();
      if (an->requires_grad) {
        double* ga = an->grad.data();
        const double* bv = bn->value.data();
        for (int i = 0; i < m; ++i) {
          for (int p = 0; p < k; ++p) {
            double s = 0.0;
            const double* grow = g + static_cast<std::size_t>(i) * n;
            const double* brow = bv + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
            ga[static_cast<std::size_t>(i) * k + p] += s;
          }
        }
      }
      if (bn->requires_grad) {
        double* gb = bn->grad.data();
        const double* av = an->value.data();
        for (int p = 0; p < k; ++p) {
          for (int i = 0; i < m; ++i) {
            double av_ip = av[static_cast<std::size_t>(i) * k + p];
            const double* grow = g + static_cast<std::size_t>(i) * n;
            double* gbrow = gb + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) gbrow[j] += av_ip * grow[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  check_rank(w, 2, "matvec");
  check_rank(x, 1, "matvec");
  if (w.cols() != x.size()) {
    throw ShapeError("matvec: inner dimensions disagree, " +
                     shape_str(w.shape()) + " vs " + shape_str(x.shape()));
  }
  int m = w.rows(), n = w.cols();
  bool rec = recording({&w, &x});
  Tensor out = make_out({m}, rec);
  const auto& wv = w.data();
  const auto& xv = x.data();
  auto& ov = out.data();
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    const double* wrow = wv.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) s += wrow[j] * xv[j];
    ov[i] = s;
  }
  if (rec) {
    auto wn = w.handle(), xn = x.handle(), on = out.handle();
    Tape::active()->record(out, [wn, xn, on, m, n] {
      const double* g = on->grad.data();
      if (wn->requires_grad) {
        for (int i = 0; i < m; ++i) {
          double gi = g[i];
          double* wrow = wn->grad.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) wrow[j] += gi * xn->value[j];
        }
      }
      if (xn->requires_grad) {
        for (int i = 0; i < m; ++i) {
          double gi = g[i];
          const double* wrow = wn->value.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) xn->grad[j] += gi * wrow[j];
        }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& m) {
  check_rank(m, 2, "transpose");
  int r = m.rows(), c = m.cols();
  bool rec = recording({&m});
  Tensor out = make_out({c, r}, rec);
  const auto& mv = m.data();
  auto& ov = out.data();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      ov[static_cast<std::size_t>(j) * r + i] =
          mv[static_cast<std::size_t>(i) * c + j];
  if (rec) {
    auto mn = m.handle(), on = out.handle();
    Tape::active()->record(out, [mn, on, r, c] {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          mn->grad[static_cast<std::size_t>(i) * c + j] +=
              on->grad[static_cast<std::size_t>(j) * r + i];
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  bool rec = recording({&x});
  Tensor out = make_out(x.shape(), rec);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i)
    ov[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  if (rec) {
    auto xn = x.handle(), on = out.handle();
    Tape::active()->record(out, [xn, on] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        double s = on->value[i];
        xn->grad[i] += on->grad[i] * s * (1.0 - s);
      }
    });
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  bool rec = recording({&x});
  Tensor out = make_out(x.shape(), rec);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::tanh(xv[i]);
  if (rec) {
    auto xn = x.handle(), on = out.handle();
    Tape::active()->record(out, [xn, on] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        double t = on->value[i];
        xn->grad[i] += on->grad[i] * (1.0 - t * t);
      }
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  bool rec = recording({&x});
  Tensor out = make_out(x.shape(), rec);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    double cdf = 0.5 * (1.0 + std::erf(xv[i] * M_SQRT1_2));
    ov[i] = xv[i] * cdf;
  }
  if (rec) {
    auto xn = x.handle(), on = out.handle();
    Tape::active()->record(out, [xn, on] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        double v = xn->value[i];
        double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
        double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        xn->grad[i] += on->grad[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

Tensor log(const Tensor& x) {
  bool rec = recording({&x});
  Tensor out = make_out(x.shape(), rec);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::log(xv[i]);
  if (rec) {
    auto xn = x.handle(), on = out.handle();
    Tape::active()->record(out, [xn, on] {
      for (std::size_t i = 0; i < on->grad.size(); ++i)
        xn->grad[i] += on->grad[i] / xn->value[i];
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& m) {
  check_rank(m, 2, "softmax_rows");
  int rows = m.rows(), cols = m.cols();
  bool rec = recording({&m});
  Tensor out = make_out(m.shape(), rec);
  const auto& mv = m.data();
  auto& ov = out.data();
  for (int i = 0; i < rows; ++i) {
    const double* row = mv.data() + static_cast<std::size_t>(i) * cols;
    double* orow = ov.data() + static_cast<std::size_t>(i) * cols;
    double mx = row[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < cols; ++j) {
      orow[j] = std::exp(row[j] - mx);
      z += orow[j];
    }
    for (int j = 0; j < cols; ++j) orow[j] /= z;
  }
  if (rec) {
    auto mn = m.handle(), on = out.handle();
    Tape::active()->record(out, [mn, on, rows, cols] {
      for (int i = 0; i < rows; ++i) {
        const double* y = on->value.data() + static_cast<std::size_t>(i) * cols;
        const double* gy = on->grad.data() + static_cast<std::size_t>(i) * cols;
        double* gx = mn->grad.data() + static_cast<std::size_t>(i) * cols;
        double dot = 0.0;
        for (int j = 0; j < cols; ++j) dot += gy[j] * y[j];
        for (int j = 0; j < cols; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
    });
  }
  return out;
}

Tensor logsumexp_rows(const Tensor& m) {
  check_rank(m, 2, "logsumexp_rows");
  int rows = m.rows(), cols = m.cols();
  bool rec = recording({&m});
  Tensor out = make_out({rows}, rec);
  const auto& mv = m.data();
  auto& ov = out.data();
  for (int i = 0; i < rows; ++i) {
    const double* row = mv.data() + static_cast<std::size_t>(i) * cols;
    double mx = row[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < cols; ++j) z += std::exp(row[j] - mx);
    ov[i] = mx + std::log(z);
  }
  if (rec) {
    auto mn = m.handle(), on = out.handle();
    Tape::active()->record(out, [mn, on, rows, cols] {
      for (int i = 0; i < rows; ++i) {
        double lse = on->value[i];
        double gy = on->grad[i];
        const double* row = mn->value.data() + static_cast<std::size_t>(i) * cols;
        double* gx = mn->grad.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) gx[j] += gy * std::exp(row[j] - lse);
      }
    });
  }
  return out;
}

Tensor logsumexp_all(const Tensor& x) {
  bool rec = recording({&x});
  Tensor out = make_out({}, rec);
  const auto& xv = x.data();
  double mx = xv[0];
  for (std::size_t i = 1; i < xv.size(); ++i) mx = std::max(mx, xv[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) z += std::exp(xv[i] - mx);
  out.data()[0] = mx + std::log(z);
  if (rec) {
    auto xn = x.handle(), on = out.handle();
    Tape::active()->record(out, [xn, on] {
      double lse = on->value[0];
      double gy = on->grad[0];
      for (std::size_t i = 0; i < xn->grad.size(); ++i)
        xn->grad[i] += gy * std::exp(xn->value[i] - lse);
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  if (x.rank() != 1 && x.rank() != 2) {
    throw ShapeError("layer_norm: expected vector or matrix, got " +
                     shape_str(x.shape()));
  }
  int cols = x.rank() == 2 ? x.cols() : x.size();
  int rows = x.rank() == 2 ? x.rows() : 1;
  if (gain.rank() != 1 || gain.size() != cols || bias.rank() != 1 ||
      bias.size() != cols) {
    throw ShapeError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()) + " do not match last axis of " +
                     shape_str(x.shape()));
  }
  bool rec = recording({&x, &gain, &bias});
  Tensor out = make_out(x.shape(), rec);
  const auto& xv = x.data();
  const auto& gv = gain.data();
  const auto& bv = bias.data();
  auto& ov = out.data();
  for (int i = 0; i < rows; ++i) {
    const double* row = xv.data() + static_cast<std::size_t>(i) * cols;
    double* orow = ov.data() + static_cast<std::size_t>(i) * cols;
    double mean = 0.0;
    for (int j = 0; j < cols; ++j) mean += row[j];
    mean /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) {
      double d = row[j] - mean;
      var += d * d;
    }
    var /= cols;
    double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < cols; ++j)
      orow[j] = (row[j] - mean) * inv * gv[j] + bv[j];
  }
  if (rec) {
    auto xn = x.handle(), gn = gain.handle(), bn = bias.handle(),
         on = out.handle();
    Tape::active()->record(out, [xn, gn, bn, on, rows, cols, eps] {
      std::vector<double> xhat(static_cast<std::size_t>(cols));
      for (int i = 0; i < rows; ++i) {
        const double* row = xn->value.data() + static_cast<std::size_t>(i) * cols;
        const double* gy = on->grad.data() + static_cast<std::size_t>(i) * cols;
        double mean = 0.0;
        for (int j = 0; j < cols; ++j) mean += row[j];
        mean /= cols;
        double var = 0.0;
        for (int j = 0; j < cols; ++j) {
          double d = row[j] - mean;
          var += d * d;
        }
        var /= cols;
        double inv = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < cols; ++j) xhat[j] = (row[j] - mean) * inv;
        if (gn->requires_grad)
          for (int j = 0; j < cols; ++j) gn->grad[j] += gy[j] * xhat[j];
        if (bn->requires_grad)
          for (int j = 0; j < cols; ++j) bn->grad[j] += gy[j];
        if (xn->requires_grad) {
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (int j = 0; j < cols; ++j) {
            double dxhat = gy[j] * gn->value[j];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat[j];
          }
          mean_dxhat /= cols;
          mean_dxhat_xhat /= cols;
          double* gx = xn->grad.data() + static_cast<std::size_t>(i) * cols;
          for (int j = 0; j < cols; ++j) {
            double dxhat = gy[j] * gn->value[j];
            gx[j] += inv * (dxhat - mean_dxhat - xhat[j] * mean_dxhat_xhat);
          }
        }
      }
    });
  }
  return out;
}

Tensor embed_rows(const Tensor& table, const std::vector<int>& ids) {
  check_rank(table, 2, "embed_rows");
  int v = table.rows(), d = table.cols();
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= v) {
      throw VocabError("embed_rows: id " + std::to_string(ids[t]) +
                       " out of range [0," + std::to_string(v) +
                       ") at position " + std::to_string(t));
    }
  }
  int rows = static_cast<int>(ids.size());
  bool rec = recording({&table});
  Tensor out = make_out({rows, d}, rec);
  const auto& tv = table.data();
  auto& ov = out.data();
  for (int t = 0; t < rows; ++t) {
    const double* src = tv.data() + static_cast<std::size_t>(ids[t]) * d;
    double* dst = ov.data() + static_cast<std::size_t>(t) * d;
    std::copy(src, src + d, dst);
  }
  if (rec) {
    auto tn = table.handle(), on = out.handle();
    Tape::active()->record(out, [tn, on, ids, rows, d] {
      for (int t = 0; t < rows; ++t) {
        const double* g = on->grad.data() + static_cast<std::size_t>(t) * d;
        double* dst = tn->grad.data() + static_cast<std::size_t>(ids[t]) * d;
        for (int j = 0; j < d; ++j) dst[j] += g[j];
      }
    });
  }
  return out;
}

Tensor take_row(const Tensor& m, int r) {
  check_rank(m, 2, "take_row");
  if (r < 0 || r >= m.rows()) {
    throw ContractError("take_row: row " + std::to_string(r) +
                        " out of range for " + shape_str(m.shape()));
  }
  int cols = m.cols();
  bool rec = recording({&m});
  Tensor out = make_out({cols}, rec);
  const double* src = m.data().data() + static_cast<std::size_t>(r) * cols;
  std::copy(src, src + cols, out.data().data());
  if (rec) {
    auto mn = m.handle(), on = out.handle();
    Tape::active()->record(out, [mn, on, r, cols] {
      double* dst = mn->grad.data() + static_cast<std::size_t>(r) * cols;
      for (int j = 0; j < cols; ++j) dst[j] += on->grad[j];
    });
  }
  return out;
}

Tensor slice_vec(const Tensor& v, int i0, int i1) {
  check_rank(v, 1, "slice_vec");
  if (i0 < 0 || i1 > v.size() || i0 >= i1) {
    throw ContractError("slice_vec: bad range [" + std::to_string(i0) + "," +
                        std::to_string(i1) + ") for " + shape_str(v.shape()));
  }
  bool rec = recording({&v});
  Tensor out = make_out({i1 - i0}, rec);
  std::copy(v.data().begin() + i0, v.data().begin() + i1, out.data().begin());
  if (rec) {
    auto vn = v.handle(), on = out.handle();
    Tape::active()->record(out, [vn, on, i0] {
      for (std::size_t j = 0; j < on->grad.size(); ++j)
        vn->grad[static_cast<std::size_t>(i0) + j] += on->grad[j];
    });
  }
  return out;
}

Tensor slice_block(const Tensor& m, int r0, int r1, int c0, int c1) {
  check_rank(m, 2, "slice_block");
  if (r0 < 0 || r1 > m.rows() || r0 >= r1 || c0 < 0 || c1 > m.cols() ||
      c0 >= c1) {
    throw ContractError("slice_block: bad range rows [" + std::to_string(r0) +
                        "," + std::to_string(r1) + ") cols [" +
                        std::to_string(c0) + "," + std::to_string(c1) +
                        ") for " + shape_str(m.shape()));
  }
  int rows = r1 - r0, cols = c1 - c0, mc = m.cols();
  bool rec = recording({&m});
  Tensor out = make_out({rows, cols}, rec);
  const auto& mv = m.data();
  auto& ov = out.data();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      ov[static_cast<std::size_t>(i) * cols + j] =
          mv[static_cast<std::size_t>(i + r0) * mc + (j + c0)];
  if (rec) {
    auto mn = m.handle(), on = out.handle();
    Tape::active()->record(out, [mn, on, r0, c0, rows, cols, mc] {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          mn->grad[static_cast<std::size_t>(i + r0) * mc + (j + c0)] +=
              on->grad[static_cast<std::size_t>(i) * cols + j];
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& m, int r0, int r1) {
  return slice_block(m, r0, r1, 0, m.cols());
}

Tensor slice_cols(const Tensor& m, int c0, int c1) {
  return slice_block(m, 0, m.rows(), c0, c1);
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  int cols = rows[0].size();
  bool rec = false;
  for (const Tensor& r : rows) {
    check_rank(r, 1, "stack_rows");
    if (r.size() != cols) {
      throw ShapeError("stack_rows: row length mismatch " +
                       shape_str(r.shape()) + " vs " +
                       shape_str(rows[0].shape()));
    }
    if (Tape::active() && r.requires_grad()) rec = true;
  }
  int n = static_cast<int>(rows.size());
  Tensor out = make_out({n, cols}, rec);
  auto& ov = out.data();
  for (int i = 0; i < n; ++i)
    std::copy(rows[i].data().begin(), rows[i].data().end(),
              ov.begin() + static_cast<std::size_t>(i) * cols);
  if (rec) {
    std::vector<std::shared_ptr<TensorNode>> ins;
    ins.reserve(rows.size());
    for (const Tensor& r : rows) ins.push_back(r.handle());
    auto on = out.handle();
    Tape::active()->record(out, [ins, on, cols] {
      for (std::size_t i = 0; i < ins.size(); ++i) {
        if (!ins[i]->requires_grad) continue;
        const double* g = on->grad.data() + i * cols;
        for (int j = 0; j < cols; ++j) ins[i]->grad[j] += g[j];
      }
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& mats) {
  if (mats.empty()) throw ContractError("concat_cols: no inputs");
  int rows = mats[0].rows();
  int total = 0;
  bool rec = false;
  for (const Tensor& m : mats) {
    check_rank(m, 2, "concat_cols");
    if (m.rows() != rows) {
      throw ShapeError("concat_cols: row count mismatch " +
                       shape_str(m.shape()) + " vs " +
                       shape_str(mats[0].shape()));
    }
    total += m.cols();
    if (Tape::active() && m.requires_grad()) rec = true;
  }
  Tensor out = make_out({rows, total}, rec);
  auto& ov = out.data();
  int off = 0;
  for (const Tensor& m : mats) {
    int c = m.cols();
    for (int i = 0; i < rows; ++i)
      std::copy(m.data().begin() + static_cast<std::size_t>(i) * c,
                m.data().begin() + static_cast<std::size_t>(i + 1) * c,
                ov.begin() + static_cast<std::size_t>(i) * total + off);
    off += c;
  }
  if (rec) {
    std::vector<std::shared_ptr<TensorNode>> ins;
    std::vector<int> offs;
    int o = 0;
    for (const Tensor& m : mats) {
      ins.push_back(m.handle());
      offs.push_back(o);
      o += m.cols();
    }
    auto on = out.handle();
    Tape::active()->record(out, [ins, offs, on, rows, total] {
      for (std::size_t k = 0; k < ins.size(); ++k) {
        if (!ins[k]->requires_grad) continue;
        int c = ins[k]->shape[1];
        for (int i = 0; i < rows; ++i) {
          const double* g =
              on->grad.data() + static_cast<std::size_t>(i) * total + offs[k];
          double* dst = ins[k]->grad.data() + static_cast<std::size_t>(i) * c;
          for (int j = 0; j < c; ++j) dst[j] += g[j];
        }
      }
    });
  }
  return out;
}

Tensor pick_rows(const Tensor& m, const std::vector<int>& idx) {
  check_rank(m, 2, "pick_rows");
  if (static_cast<int>(idx.size()) != m.rows()) {
    throw ShapeError("pick_rows: " + std::to_string(idx.size()) +
                     " indices for " + shape_str(m.shape()));
  }
  int cols = m.cols();
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] < 0 || idx[t] >= cols) {
      throw ContractError("pick_rows: index " + std::to_string(idx[t]) +
                          " out of range [0," + std::to_string(cols) +
                          ") at row " + std::to_string(t));
    }
  }
  int rows = m.rows();
  bool rec = recording({&m});
  Tensor out = make_out({rows}, rec);
  const auto& mv = m.data();
  auto& ov = out.data();
  for (int t = 0; t < rows; ++t)
    ov[t] = mv[static_cast<std::size_t>(t) * cols + idx[t]];
  if (rec) {
    auto mn = m.handle(), on = out.handle();
    Tape::active()->record(out, [mn, on, idx, cols] {
      for (std::size_t t = 0; t < idx.size(); ++t)
        mn->grad[t * cols + idx[t]] += on->grad[t];
    });
  }
  return out;
}

Tensor pick_entries(const Tensor& m, const std::vector<int>& rows,
                    const std::vector<int>& cols) {
  check_rank(m, 2, "pick_entries");
  if (rows.size() != cols.size()) {
    throw ShapeError("pick_entries: " + std::to_string(rows.size()) +
                     " rows vs " + std::to_string(cols.size()) + " cols");
  }
  int mr = m.rows(), mc = m.cols();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= mr || cols[k] < 0 || cols[k] >= mc) {
      throw ContractError("pick_entries: (" + std::to_string(rows[k]) + "," +
                          std::to_string(cols[k]) + ") out of range for " +
                          shape_str(m.shape()));
    }
  }
  int n = static_cast<int>(rows.size());
  bool rec = recording({&m});
  Tensor out = make_out({n}, rec);
  const auto& mv = m.data();
  auto& ov = out.data();
  for (int k = 0; k < n; ++k)
    ov[k] = mv[static_cast<std::size_t>(rows[k]) * mc + cols[k]];
  if (rec) {
    auto mn = m.handle(), on = out.handle();
    Tape::active()->record(out, [mn, on, rows, cols, mc] {
      for (std::size_t k = 0; k < rows.size(); ++k)
        mn->grad[static_cast<std::size_t>(rows[k]) * mc + cols[k]] +=
            on->grad[k];
    });
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  bool rec = recording({&x});
  Tensor out = make_out({}, rec);
  double s = 0.0;
  for (double v : x.data()) s += v;
  out.data()[0] = s;
  if (rec) {
    auto xn = x.handle(), on = out.handle();
    Tape::active()->record(out, [xn, on] {
      double g = on->grad[0];
      for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g;
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout: rate " + std::to_string(p) +
                        " outside [0,1)");
  }
  if (p == 0.0) return x;
  Tensor mask = Tensor::zeros(x.shape(), false);
  double keep = 1.0 / (1.0 - p);
  for (auto& v : mask.data()) v = rng.uniform() < p ? 0.0 : keep;
  return mul(x, mask);
}

std::vector<int> argmax_rows(const Tensor& m) {
  if (m.rank() != 2) {
    throw ShapeError("argmax_rows: expected matrix, got " +
                     shape_str(m.shape()));
  }
  int rows = m.rows(), cols = m.cols();
  std::vector<int> out(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    int best = 0;
    for (int j = 1; j < cols; ++j)
      if (m.v(i, j) > m.v(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

bool all_finite(const Tensor& x) {
  for (double v : x.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace absa

// Copyright 2026 The subsent Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "subsent/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <string>

#include "subsent/error.hpp"

namespace subsent::num {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap view(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " +
                                             shape_string(a.shape()) + " vs " +
                                             shape_string(b.shape()));
}

detail::Node& input(detail::Node& self, std::size_t i) {
  return *self.inputs[i];
}

bool wants(detail::Node& self, std::size_t i) {
  return self.inputs[i]->requires_grad;
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) mismatch("matmul", av, bv);
  Tensor out(matrix_shape(av.rows(), bv.cols()));
  view(out).noalias() = view(av) * view(bv);
  return make_result(std::move(out), {a, b}, [](detail::Node& self) {
    auto g = view(static_cast<const Tensor&>(self.grad));
    detail::Node& na = input(self, 0);
    detail::Node& nb = input(self, 1);
    if (wants(self, 0)) {
      view(na.grad_buffer()).noalias() += g * view(std::as_const(nb.value)).transpose();
    }
    if (wants(self, 1)) {
      view(nb.grad_buffer()).noalias() += view(std::as_const(na.value)).transpose() * g;
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) mismatch("matmul_nt", av, bv);
  Tensor out(matrix_shape(av.rows(), bv.rows()));
  view(out).noalias() = view(av) * view(bv).transpose();
  return make_result(std::move(out), {a, b}, [](detail::Node& self) {
    auto g = view(static_cast<const Tensor&>(self.grad));
    detail::Node& na = input(self, 0);
    detail::Node& nb = input(self, 1);
    if (wants(self, 0)) {
      view(na.grad_buffer()).noalias() += g * view(std::as_const(nb.value));
    }
    if (wants(self, 1)) {
      view(nb.grad_buffer()).noalias() += g.transpose() * view(std::as_const(na.value));
    }
  });
}

Var transpose(const Var& a) {
  const Tensor& av = a.value();
  Tensor out(matrix_shape(av.cols(), av.rows()));
  view(out) = view(av).transpose();
  return make_result(std::move(out), {a}, [](detail::Node& self) {
    view(input(self, 0).grad_buffer()) +=
        view(static_cast<const Tensor&>(self.grad)).transpose();
  });
}

namespace {

template <typename Fwd, typename Bwd>
Var binary_same_shape(const char* name, const Var& a, const Var& b, Fwd fwd,
                      Bwd bwd) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) mismatch(name, av, bv);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  return make_result(std::move(out), {a, b}, [bwd](detail::Node& self) {
    detail::Node& na = input(self, 0);
    detail::Node& nb = input(self, 1);
    const Tensor& g = self.grad;
    Tensor* ga = wants(self, 0) ? &na.grad_buffer() : nullptr;
    Tensor* gb = wants(self, 1) ? &nb.grad_buffer() : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto [da, db] = bwd(na.value[i], nb.value[i], g[i]);
      if (ga) (*ga)[i] += da;
      if (gb) (*gb)[i] += db;
    }
  });
}

template <typename Fwd, typename Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  return make_result(std::move(out), {x}, [deriv](detail::Node& self) {
    detail::Node& nx = input(self, 0);
    Tensor& gx = nx.grad_buffer();
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * deriv(nx.value[i]);
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_same_shape(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double g) { return std::pair{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  return binary_same_shape(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double g) { return std::pair{g, -g}; });
}

Var mul(const Var& a, const Var& b) {
  return binary_same_shape(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g) { return std::pair{g * y, g * x}; });
}

Var scale(const Var& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; },
      [factor](double) { return factor; });
}

Var add_row(const Var& x, const Var& row) {
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  if (rv.size() != xv.cols()) mismatch("add_row", xv, rv);
  Tensor out = xv;
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += rv[j];
  }
  return make_result(std::move(out), {x, row}, [n, c](detail::Node& self) {
    const Tensor& g = self.grad;
    if (wants(self, 0)) {
      Tensor& gx = input(self, 0).grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (wants(self, 1)) {
      Tensor& gr = input(self, 1).grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) gr[j] += g[i * c + j];
      }
    }
  });
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var gelu(const Var& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v) {
        return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
               v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
      });
}

Var embedding(const Var& table, std::span<const std::int64_t> ids) {
  const Tensor& tv = table.value();
  const std::size_t vocab = tv.rows();
  const std::size_t h = tv.cols();
  Tensor out(matrix_shape(ids.size(), h));
  std::vector<std::size_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw Error(ErrorCode::kShapeMismatch,
                  "embedding id " + std::to_string(ids[i]) +
                      " outside table of " + std::to_string(vocab) + " rows");
    }
    rows[i] = static_cast<std::size_t>(ids[i]);
    std::copy_n(tv.data() + rows[i] * h, h, out.data() + i * h);
  }
  return make_result(std::move(out), {table},
                     [rows = std::move(rows), h](detail::Node& self) {
                       Tensor& gt = input(self, 0).grad_buffer();
                       const Tensor& g = self.grad;
                       for (std::size_t i = 0; i < rows.size(); ++i) {
                         for (std::size_t j = 0; j < h; ++j) {
                           gt[rows[i] * h + j] += g[i * h + j];
                         }
                       }
                     });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  if (gamma.value().size() != c) mismatch("layer_norm", xv, gamma.value());
  if (beta.value().size() != c) mismatch("layer_norm", xv, beta.value());
  auto xhat = std::make_shared<Tensor>(xv.shape());
  auto rstd = std::make_shared<std::vector<double>>(n);
  Tensor out(xv.shape());
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(c);
    const double r = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = r;
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (row[j] - mean) * r;
      (*xhat)[i * c + j] = xh;
      out[i * c + j] = xh * gv[j] + bv[j];
    }
  }
  return make_result(
      std::move(out), {x, gamma, beta}, [xhat, rstd, n, c](detail::Node& self) {
        const Tensor& g = self.grad;
        const Tensor& gv = input(self, 1).value;
        if (wants(self, 1)) {
          Tensor& gg = input(self, 1).grad_buffer();
          for (std::size_t i = 0; i < n * c; ++i) gg[i % c] += g[i] * (*xhat)[i];
        }
        if (wants(self, 2)) {
          Tensor& gb = input(self, 2).grad_buffer();
          for (std::size_t i = 0; i < n * c; ++i) gb[i % c] += g[i];
        }
        if (!wants(self, 0)) return;
        Tensor& gx = input(self, 0).grad_buffer();
        const double inv_c = 1.0 / static_cast<double>(c);
        for (std::size_t i = 0; i < n; ++i) {
          double mean_g = 0.0;
          double mean_gx = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double gh = g[i * c + j] * gv[j];
            mean_g += gh;
            mean_gx += gh * (*xhat)[i * c + j];
          }
          mean_g *= inv_c;
          mean_gx *= inv_c;
          for (std::size_t j = 0; j < c; ++j) {
            const double gh = g[i * c + j] * gv[j];
            gx[i * c + j] +=
                (*rstd)[i] * (gh - mean_g - (*xhat)[i * c + j] * mean_gx);
          }
        }
      });
}

Var conv1d_same(const Var& x, const Var& weight, const Var& bias,
                std::size_t segment) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (wv.rank() != 3) mismatch("conv1d_same", xv, wv);
  const std::size_t k = wv.dim(0);
  const std::size_t cin = wv.dim(1);
  const std::size_t cout = wv.dim(2);
  if (k % 2 == 0 || xv.cols() != cin || bias.value().size() != cout) {
    mismatch("conv1d_same", xv, wv);
  }
  const std::size_t len = xv.rows();
  if (segment == 0) segment = len;
  if (len % segment != 0) mismatch("conv1d_same", xv, wv);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);

  // im2col: row t holds the K input rows centred on t.
  auto cols = std::make_shared<Tensor>(matrix_shape(len, k * cin), 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + kk) - pad;
      const auto lo = static_cast<std::ptrdiff_t>(t - t % segment);
      if (src < lo || src >= lo + static_cast<std::ptrdiff_t>(segment)) continue;
      std::copy_n(xv.data() + static_cast<std::size_t>(src) * cin, cin,
                  cols->data() + t * k * cin + kk * cin);
    }
  }
  const ConstMap wmat(wv.data(), static_cast<Eigen::Index>(k * cin),
                      static_cast<Eigen::Index>(cout));
  Tensor out(matrix_shape(len, cout));
  view(out).noalias() = view(std::as_const(*cols)) * wmat;
  const Tensor& bv = bias.value();
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t c = 0; c < cout; ++c) out[t * cout + c] += bv[c];
  }

  return make_result(
      std::move(out), {x, weight, bias},
      [cols, len, k, cin, cout, pad, segment](detail::Node& self) {
        auto g = view(static_cast<const Tensor&>(self.grad));
        const Tensor& colsv = *cols;
        if (wants(self, 1)) {
          Tensor& gw = input(self, 1).grad_buffer();
          MutMap gwm(gw.data(), static_cast<Eigen::Index>(k * cin),
                     static_cast<Eigen::Index>(cout));
          gwm.noalias() += view(colsv).transpose() * g;
        }
        if (wants(self, 2)) {
          Tensor& gb = input(self, 2).grad_buffer();
          for (std::size_t t = 0; t < len; ++t) {
            for (std::size_t c = 0; c < cout; ++c) gb[c] += g(t, c);
          }
        }
        if (!wants(self, 0)) return;
        const Tensor& wv = input(self, 1).value;
        const ConstMap wmat(wv.data(), static_cast<Eigen::Index>(k * cin),
                            static_cast<Eigen::Index>(cout));
        RowMat gcols = g * wmat.transpose();
        Tensor& gx = input(self, 0).grad_buffer();
        for (std::size_t t = 0; t < len; ++t) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + kk) - pad;
            const auto lo = static_cast<std::ptrdiff_t>(t - t % segment);
            if (src < lo || src >= lo + static_cast<std::ptrdiff_t>(segment)) {
              continue;
            }
            double* dst = gx.data() + static_cast<std::size_t>(src) * cin;
            const double* from = gcols.data() + t * k * cin + kk * cin;
            for (std::size_t c = 0; c < cin; ++c) dst[c] += from[c];
          }
        }
      });
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index) {
  const std::uint64_t h = mix64(mix64(mix64(seed) ^ stream) ^ index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Var dropout(const Var& x, double p, DropoutStream& stream) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kBadArgument,
                "dropout probability must be in [0, 1)");
  }
  if (p == 0.0) return x;
  const std::uint64_t call = stream.next_call();
  const double keep_scale = 1.0 / (1.0 - p);
  const Tensor& xv = x.value();
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double m =
        counter_uniform(stream.seed(), call, i) < p ? 0.0 : keep_scale;
    (*mask)[i] = m;
    out[i] = xv[i] * m;
  }
  return make_result(std::move(out), {x}, [mask](detail::Node& self) {
    Tensor& gx = input(self, 0).grad_buffer();
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
  });
}

Var reshape(const Var& x, Shape shape) {
  const Tensor& xv = x.value();
  if (shape_size(shape) != xv.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "reshape " + shape_string(xv.shape()) + " to " +
                    shape_string(shape));
  }
  return make_result(xv.reshaped(std::move(shape)), {x},
                     [](detail::Node& self) {
                       Tensor& gx = input(self, 0).grad_buffer();
                       const Tensor& g = self.grad;
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  if (begin + count > xv.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "slice_rows past end of " + shape_string(xv.shape()));
  }
  const std::size_t c = xv.cols();
  Tensor out(matrix_shape(count, c));
  std::copy_n(xv.data() + begin * c, count * c, out.data());
  return make_result(std::move(out), {x}, [begin, c](detail::Node& self) {
    Tensor& gx = input(self, 0).grad_buffer();
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * c + i] += g[i];
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  if (begin + count > xv.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "slice_cols past end of " + shape_string(xv.shape()));
  }
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  Tensor out(matrix_shape(n, count));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(xv.data() + i * c + begin, count, out.data() + i * count);
  }
  return make_result(std::move(out), {x},
                     [begin, count, n, c](detail::Node& self) {
                       Tensor& gx = input(self, 0).grad_buffer();
                       const Tensor& g = self.grad;
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < count; ++j) {
                           gx[i * c + begin + j] += g[i * count + j];
                         }
                       }
                     });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "concat_cols of nothing");
  }
  const std::size_t n = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != n) mismatch("concat_cols", parts[0].value(), p.value());
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Tensor out(matrix_shape(n, total));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(pv.data() + i * widths[k], widths[k],
                  out.data() + i * total + offset);
    }
    offset += widths[k];
  }
  return make_result(std::move(out),
                     std::vector<Var>(parts.begin(), parts.end()),
                     [widths, n, total](detail::Node& self) {
                       const Tensor& g = self.grad;
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (wants(self, k)) {
                           Tensor& gp = input(self, k).grad_buffer();
                           for (std::size_t i = 0; i < n; ++i) {
                             for (std::size_t j = 0; j < widths[k]; ++j) {
                               gp[i * widths[k] + j] += g[i * total + off + j];
                             }
                           }
                         }
                         off += widths[k];
                       }
                     });
}

Var softmax_rows(const Var& x, std::span<const std::uint8_t> key_mask) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  if (!key_mask.empty() && key_mask.size() != c) {
    throw Error(ErrorCode::kShapeMismatch,
                "softmax_rows mask length " + std::to_string(key_mask.size()) +
                    " for " + std::to_string(c) + " columns");
  }
  auto visible = [&](std::size_t j) { return key_mask.empty() || key_mask[j]; };
  Tensor out(xv.shape(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * c;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (visible(j)) mx = std::max(mx, row[j]);
    }
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!visible(j)) continue;
      const double e = std::exp(row[j] - mx);
      out[i * c + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  return make_result(std::move(out), {x}, [n, c](detail::Node& self) {
    const Tensor& y = self.value;
    const Tensor& g = self.grad;
    Tensor& gx = input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += y[i * c + j] * g[i * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        gx[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
      }
    }
  });
}

Var sum(const Var& x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.values()) s += v;
  return make_result(Tensor::scalar(s), {x}, [](detail::Node& self) {
    Tensor& gx = input(self, 0).grad_buffer();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Tensor out(matrix_shape(idx.size(), c));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) {
      throw Error(ErrorCode::kShapeMismatch,
                  "gather_rows index " + std::to_string(idx[i]) + " of " +
                      std::to_string(n) + " rows");
    }
    std::copy_n(xv.data() + idx[i] * c, c, out.data() + i * c);
  }
  return make_result(std::move(out), {x}, [idx, c](detail::Node& self) {
    Tensor& gx = input(self, 0).grad_buffer();
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < c; ++j) gx[idx[i] * c + j] += g[i * c + j];
    }
  });
}

Var multi_head_attention(const Var& q, const Var& k, const Var& v,
                         std::size_t n_heads, std::size_t seq_len,
                         std::span<const std::uint8_t> key_mask) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  if (qv.shape() != kv.shape() || qv.shape() != vv.shape() || qv.rank() != 2) {
    mismatch("multi_head_attention", qv, kv);
  }
  const std::size_t rows = qv.rows();
  const std::size_t width = qv.cols();
  if (n_heads == 0 || width % n_heads != 0 || seq_len == 0 ||
      rows % seq_len != 0 || key_mask.size() != rows) {
    throw Error(ErrorCode::kShapeMismatch,
                "multi_head_attention: " + shape_string(qv.shape()) + " with " +
                    std::to_string(n_heads) + " heads, sequence length " +
                    std::to_string(seq_len) + ", mask of " +
                    std::to_string(key_mask.size()));
  }
  const std::size_t batch = rows / seq_len;
  const std::size_t dh = width / n_heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto L = static_cast<Eigen::Index>(seq_len);
  const auto D = static_cast<Eigen::Index>(dh);

  // probs holds batch * n_heads blocks of seq_len x seq_len.
  auto probs = std::make_shared<std::vector<double>>(batch * n_heads * seq_len * seq_len, 0.0);
  std::vector<std::uint8_t> mask(key_mask.begin(), key_mask.end());
  Tensor out(matrix_shape(rows, width), 0.0);
  const ConstMap Q = view(qv);
  const ConstMap K = view(kv);
  const ConstMap V = view(vv);
  MutMap O = view(out);
  RowMat scores(L, L);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto r0 = static_cast<Eigen::Index>(b * seq_len);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h * dh);
      scores.noalias() = Q.block(r0, c0, L, D) * K.block(r0, c0, L, D).transpose();
      MutMap P(probs->data() + (b * n_heads + h) * seq_len * seq_len, L, L);
      for (Eigen::Index i = 0; i < L; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < L; ++j) {
          if (mask[b * seq_len + j]) mx = std::max(mx, scores(i, j) * scale_factor);
        }
        if (!std::isfinite(mx)) continue;
        double z = 0.0;
        for (Eigen::Index j = 0; j < L; ++j) {
          if (!mask[b * seq_len + j]) continue;
          const double e = std::exp(scores(i, j) * scale_factor - mx);
          P(i, j) = e;
          z += e;
        }
        P.row(i) /= z;
      }
      O.block(r0, c0, L, D).noalias() = P * V.block(r0, c0, L, D);
    }
  }

  return make_result(
      std::move(out), {q, k, v},
      [probs, batch, n_heads, seq_len, dh, scale_factor](detail::Node& self) {
        const auto L = static_cast<Eigen::Index>(seq_len);
        const auto D = static_cast<Eigen::Index>(dh);
        const ConstMap G = view(static_cast<const Tensor&>(self.grad));
        const ConstMap Q = view(static_cast<const Tensor&>(input(self, 0).value));
        const ConstMap K = view(static_cast<const Tensor&>(input(self, 1).value));
        const ConstMap V = view(static_cast<const Tensor&>(input(self, 2).value));
        const bool gq = wants(self, 0);
        const bool gk = wants(self, 1);
        const bool gv = wants(self, 2);
        std::optional<MutMap> GQ, GK, GV;
        if (gq) GQ.emplace(view(input(self, 0).grad_buffer()));
        if (gk) GK.emplace(view(input(self, 1).grad_buffer()));
        if (gv) GV.emplace(view(input(self, 2).grad_buffer()));
        RowMat dP(L, L);
        RowMat dS(L, L);
        for (std::size_t b = 0; b < batch; ++b) {
          const auto r0 = static_cast<Eigen::Index>(b * seq_len);
          for (std::size_t h = 0; h < n_heads; ++h) {
            const auto c0 = static_cast<Eigen::Index>(h * dh);
            const ConstMap P(probs->data() + (b * n_heads + h) * seq_len * seq_len, L, L);
            const auto Gb = G.block(r0, c0, L, D);
            if (gv) GV->block(r0, c0, L, D).noalias() += P.transpose() * Gb;
            if (!gq && !gk) continue;
            dP.noalias() = Gb * V.block(r0, c0, L, D).transpose();
            for (Eigen::Index i = 0; i < L; ++i) {
              const double dot = P.row(i).dot(dP.row(i));
              dS.row(i) = P.row(i).cwiseProduct(
                  (dP.row(i).array() - dot).matrix());
            }
            dS *= scale_factor;
            if (gq) GQ->block(r0, c0, L, D).noalias() += dS * K.block(r0, c0, L, D);
            if (gk) GK->block(r0, c0, L, D).noalias() += dS.transpose() * Q.block(r0, c0, L, D);
          }
        }
      });
}

}  // namespace subsent::num

// Copyright 2026 The mtr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtr/error.hpp"
#include "mtr/sphere.hpp"

namespace mtr::ops {
namespace {

// C = A B
DenseArray gemm_nn(const DenseArray& a, const DenseArray& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  DenseArray c = DenseArray::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.row(i).data();
    const double* ai = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

// C = A B^T
DenseArray gemm_nt(const DenseArray& a, const DenseArray& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  DenseArray c = DenseArray::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c(i, j) = s;
    }
  }
  return c;
}

// C = A^T B
DenseArray gemm_tn(const DenseArray& a, const DenseArray& b) {
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  DenseArray c = DenseArray::matrix(n, m);
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a.row(p).data();
    const double* bp = b.row(p).data();
    for (std::size_t i = 0; i < n; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeMismatch(msg);
}

template <typename F>
DenseArray map(const DenseArray& a, F f) {
  DenseArray out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  require_same_shape(av, bv, "add");
  DenseArray out = av;
  out.accumulate(bv);
  return t.record("add", std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    tp.accumulate_grad(a, g);
    tp.accumulate_grad(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  require_same_shape(av, bv, "sub");
  DenseArray out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return t.record("sub", std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    tp.accumulate_grad(a, g);
    if (tp.requires_grad(b)) {
      DenseArray& gb = tp.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  require_same_shape(av, bv, "mul");
  DenseArray out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record("mul", std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    const DenseArray& av = tp.value(a);
    const DenseArray& bv = tp.value(b);
    if (tp.requires_grad(a)) {
      DenseArray& ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(b)) {
      DenseArray& gb = tp.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Tape& t, Var a, double factor) { return affine(t, a, factor, 0.0); }

Var affine(Tape& t, Var a, double factor, double offset) {
  DenseArray out = map(t.value(a), [&](double x) { return factor * x + offset; });
  return t.record("affine", std::move(out), {a}, [a, factor](Tape& tp, std::size_t self) {
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var add_row(Tape& t, Var a, Var row) {
  const DenseArray& av = t.value(a);
  const DenseArray& rv = t.value(row);
  require(rv.rows() == 1 && rv.cols() == av.cols(),
          "add_row: " + av.shape_string() + " + " + rv.shape_string());
  DenseArray out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += rv[j];
  }
  return t.record("add_row", std::move(out), {a, row}, [a, row](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    tp.accumulate_grad(a, g);
    if (tp.requires_grad(row)) {
      DenseArray& gr = tp.grad_buffer(row);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto gi = g.row(i);
        for (std::size_t j = 0; j < gi.size(); ++j) gr[j] += gi[j];
      }
    }
  });
}

Var broadcast_rows(Tape& t, Var row, std::size_t n) {
  const DenseArray& rv = t.value(row);
  require(rv.rows() == 1, "broadcast_rows: expected a row, got " + rv.shape_string());
  DenseArray out = DenseArray::matrix(n, rv.cols());
  for (std::size_t i = 0; i < n; ++i) std::copy(rv.values().begin(), rv.values().end(), out.row(i).begin());
  return t.record("broadcast_rows", std::move(out), {row}, [row](Tape& tp, std::size_t self) {
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& gr = tp.grad_buffer(row);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto gi = g.row(i);
      for (std::size_t j = 0; j < gi.size(); ++j) gr[j] += gi[j];
    }
  });
}

Var mul_col(Tape& t, Var a, Var col) {
  const DenseArray& av = t.value(a);
  const DenseArray& cv = t.value(col);
  require(cv.cols() == 1 && cv.rows() == av.rows(),
          "mul_col: " + av.shape_string() + " * " + cv.shape_string());
  DenseArray out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (double& x : out.row(i)) x *= cv[i];
  }
  return t.record("mul_col", std::move(out), {a, col}, [a, col](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    const DenseArray& av = tp.value(a);
    const DenseArray& cv = tp.value(col);
    if (tp.requires_grad(a)) {
      DenseArray& ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto gi = g.row(i);
        auto gai = ga.row(i);
        for (std::size_t j = 0; j < gi.size(); ++j) gai[j] += gi[j] * cv[i];
      }
    }
    if (tp.requires_grad(col)) {
      DenseArray& gc = tp.grad_buffer(col);
      for (std::size_t i = 0; i < g.rows(); ++i) gc[i] += dot(g.row(i), av.row(i));
    }
  });
}

Var matmul(Tape& t, Var a, Var b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  require(av.cols() == bv.rows(), "matmul: " + av.shape_string() + " x " + bv.shape_string());
  return t.record("matmul", gemm_nn(av, bv), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    if (tp.requires_grad(a)) tp.accumulate_grad(a, gemm_nt(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate_grad(b, gemm_tn(tp.value(a), g));
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  require(av.cols() == bv.cols(),
          "matmul_nt: " + av.shape_string() + " x " + bv.shape_string() + "^T");
  return t.record("matmul_nt", gemm_nt(av, bv), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    if (tp.requires_grad(a)) tp.accumulate_grad(a, gemm_nn(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate_grad(b, gemm_tn(g, tp.value(a)));
  });
}

Var tanh(Tape& t, Var a) {
  DenseArray out = map(t.value(a), [](double x) { return std::tanh(x); });
  return t.record("tanh", std::move(out), {a}, [a](Tape& tp, std::size_t self) {
    const DenseArray& y = tp.value(Var{self});
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Tape& t, Var a) {
  DenseArray out = map(t.value(a), [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return t.record("sigmoid", std::move(out), {a}, [a](Tape& tp, std::size_t self) {
    const DenseArray& y = tp.value(Var{self});
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var exp(Tape& t, Var a) {
  DenseArray out = map(t.value(a), [](double x) { return std::exp(x); });
  return t.record("exp", std::move(out), {a}, [a](Tape& tp, std::size_t self) {
    const DenseArray& y = tp.value(Var{self});
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var log(Tape& t, Var a) {
  DenseArray out = map(t.value(a), [](double x) { return std::log(x); });
  return t.record("log", std::move(out), {a}, [a](Tape& tp, std::size_t self) {
    const DenseArray& x = tp.value(a);
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Var concat_cols(Tape& t, Var a, Var b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  require(av.rows() == bv.rows(),
          "concat_cols: " + av.shape_string() + " | " + bv.shape_string());
  const std::size_t ca = av.cols(), cb = bv.cols();
  DenseArray out = DenseArray::matrix(av.rows(), ca + cb);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    std::copy(av.row(i).begin(), av.row(i).end(), out.row(i).begin());
    std::copy(bv.row(i).begin(), bv.row(i).end(), out.row(i).begin() + ca);
  }
  return t.record("concat_cols", std::move(out), {a, b},
                  [a, b, ca, cb](Tape& tp, std::size_t self) {
                    const DenseArray g = tp.grad(Var{self});
                    if (tp.requires_grad(a)) {
                      DenseArray& ga = tp.grad_buffer(a);
                      for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < ca; ++j) ga(i, j) += g(i, j);
                    }
                    if (tp.requires_grad(b)) {
                      DenseArray& gb = tp.grad_buffer(b);
                      for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < cb; ++j) gb(i, j) += g(i, ca + j);
                    }
                  });
}

Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t end) {
  const DenseArray& av = t.value(a);
  require(begin <= end && end <= av.cols(), "slice_cols: range out of bounds for " +
                                                av.shape_string());
  const std::size_t w = end - begin;
  DenseArray out = DenseArray::matrix(av.rows(), w);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    auto src = av.row(i);
    std::copy(src.begin() + begin, src.begin() + end, out.row(i).begin());
  }
  return t.record("slice_cols", std::move(out), {a}, [a, begin, w](Tape& tp, std::size_t self) {
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < w; ++j) ga(i, begin + j) += g(i, j);
  });
}

Var normalize_rows(Tape& t, Var a) {
  const DenseArray& av = t.value(a);
  DenseArray out = av;
  DenseArray norms = DenseArray::matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    const double n = l2_norm(av.row(i));
    if (!(n >= kMinNorm)) {
      throw ZeroNorm("normalize_rows: row " + std::to_string(i) + " has norm " +
                     std::to_string(n));
    }
    norms[i] = n;
    for (double& x : out.row(i)) x /= n;
  }
  return t.record("normalize_rows", std::move(out), {a},
                  [a, norms = std::move(norms)](Tape& tp, std::size_t self) {
                    const DenseArray& y = tp.value(Var{self});
                    const DenseArray& g = tp.grad(Var{self});
                    DenseArray& ga = tp.grad_buffer(a);
                    for (std::size_t i = 0; i < y.rows(); ++i) {
                      const double yg = dot(y.row(i), g.row(i));
                      auto yi = y.row(i);
                      auto gi = g.row(i);
                      auto gai = ga.row(i);
                      for (std::size_t j = 0; j < yi.size(); ++j)
                        gai[j] += (gi[j] - yi[j] * yg) / norms[i];
                    }
                  });
}

Var row_dot(Tape& t, Var a, Var b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  require_same_shape(av, bv, "row_dot");
  DenseArray out = DenseArray::matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) out[i] = dot(av.row(i), bv.row(i));
  return t.record("row_dot", std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const DenseArray g = tp.grad(Var{self});
    const DenseArray& av = tp.value(a);
    const DenseArray& bv = tp.value(b);
    if (tp.requires_grad(a)) {
      DenseArray& ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < av.rows(); ++i) {
        auto gai = ga.row(i);
        auto bi = bv.row(i);
        for (std::size_t j = 0; j < gai.size(); ++j) gai[j] += g[i] * bi[j];
      }
    }
    if (tp.requires_grad(b)) {
      DenseArray& gb = tp.grad_buffer(b);
      for (std::size_t i = 0; i < av.rows(); ++i) {
        auto gbi = gb.row(i);
        auto ai = av.row(i);
        for (std::size_t j = 0; j < gbi.size(); ++j) gbi[j] += g[i] * ai[j];
      }
    }
  });
}

Var clamp_arccos(Tape& t, Var c) {
  DenseArray out = map(t.value(c), [](double x) { return kernel::clamped_arccos(x); });
  return t.record("clamp_arccos", std::move(out), {c}, [c](Tape& tp, std::size_t self) {
    const DenseArray& x = tp.value(c);
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& gc = tp.grad_buffer(c);
    for (std::size_t i = 0; i < g.size(); ++i)
      gc[i] += g[i] * kernel::clamped_arccos_derivative(x[i]);
  });
}

Var slerp_rows(Tape& t, Var u, Var v, Var lambda) {
  const DenseArray& uv = t.value(u);
  const DenseArray& vv = t.value(v);
  const DenseArray& lv = t.value(lambda);
  require_same_shape(uv, vv, "slerp_rows");
  require(lv.cols() == 1 && lv.rows() == uv.rows(),
          "slerp_rows: lambda must be " + std::to_string(uv.rows()) + "x1, got " +
              lv.shape_string());
  DenseArray out(uv.shape());
  for (std::size_t i = 0; i < uv.rows(); ++i)
    kernel::slerp_forward(uv.row(i), vv.row(i), lv[i], out.row(i));
  return t.record("slerp_rows", std::move(out), {u, v, lambda},
                  [u, v, lambda](Tape& tp, std::size_t self) {
                    const DenseArray& uv = tp.value(u);
                    const DenseArray& vv = tp.value(v);
                    const DenseArray& lv = tp.value(lambda);
                    const DenseArray& y = tp.value(Var{self});
                    const DenseArray g = tp.grad(Var{self});
                    DenseArray gu(uv.shape()), gv(vv.shape()), gl(lv.shape());
                    for (std::size_t i = 0; i < uv.rows(); ++i) {
                      kernel::slerp_backward(uv.row(i), vv.row(i), lv[i], y.row(i), g.row(i),
                                             gu.row(i), gv.row(i), gl[i]);
                    }
                    tp.accumulate_grad(u, gu);
                    tp.accumulate_grad(v, gv);
                    tp.accumulate_grad(lambda, gl);
                  });
}

Var rowvec_matmul(Tape& t, Var x, Var mats, std::size_t out_cols) {
  const DenseArray& xv = t.value(x);
  const DenseArray& mv = t.value(mats);
  const std::size_t k = xv.cols();
  require(mv.rows() == xv.rows() && mv.cols() == k * out_cols,
          "rowvec_matmul: " + xv.shape_string() + " with " + mv.shape_string() +
              " for " + std::to_string(out_cols) + " outputs");
  DenseArray out = DenseArray::matrix(xv.rows(), out_cols);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    const double* xi = xv.row(i).data();
    const double* mi = mv.row(i).data();
    double* oi = out.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double xp = xi[p];
      const double* mrow = mi + p * out_cols;
      for (std::size_t j = 0; j < out_cols; ++j) oi[j] += xp * mrow[j];
    }
  }
  return t.record("rowvec_matmul", std::move(out), {x, mats},
                  [x, mats, k, out_cols](Tape& tp, std::size_t self) {
                    const DenseArray g = tp.grad(Var{self});
                    const DenseArray& xv = tp.value(x);
                    const DenseArray& mv = tp.value(mats);
                    if (tp.requires_grad(x)) {
                      DenseArray& gx = tp.grad_buffer(x);
                      for (std::size_t i = 0; i < xv.rows(); ++i) {
                        const double* mi = mv.row(i).data();
                        const double* gi = g.row(i).data();
                        for (std::size_t p = 0; p < k; ++p) {
                          double s = 0.0;
                          for (std::size_t j = 0; j < out_cols; ++j)
                            s += gi[j] * mi[p * out_cols + j];
                          gx(i, p) += s;
                        }
                      }
                    }
                    if (tp.requires_grad(mats)) {
                      DenseArray& gm = tp.grad_buffer(mats);
                      for (std::size_t i = 0; i < xv.rows(); ++i) {
                        const double* xi = xv.row(i).data();
                        const double* gi = g.row(i).data();
                        double* gmi = gm.row(i).data();
                        for (std::size_t p = 0; p < k; ++p)
                          for (std::size_t j = 0; j < out_cols; ++j)
                            gmi[p * out_cols + j] += xi[p] * gi[j];
                      }
                    }
                  });
}

namespace {

// P = A^T A - I for A (rows x rank) stored row-major in `a`.
void gram_minus_identity(const double* a, std::size_t rows, std::size_t rank, double* p) {
  for (std::size_t i = 0; i < rank; ++i) {
    for (std::size_t j = 0; j < rank; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += a[r * rank + i] * a[r * rank + j];
      p[i * rank + j] = s - (i == j ? 1.0 : 0.0);
    }
  }
}

}  // namespace

Var ortho_penalty(Tape& t, Var mats, std::size_t rank) {
  const DenseArray& mv = t.value(mats);
  require(rank > 0 && mv.cols() % rank == 0,
          "ortho_penalty: " + mv.shape_string() + " is not a stack of (. x " +
              std::to_string(rank) + ") matrices");
  const std::size_t rows = mv.cols() / rank;
  DenseArray out = DenseArray::matrix(mv.rows(), 1);
  std::vector<double> p(rank * rank);
  for (std::size_t i = 0; i < mv.rows(); ++i) {
    gram_minus_identity(mv.row(i).data(), rows, rank, p.data());
    double s = 0.0;
    for (double x : p) s += x * x;
    out[i] = s;
  }
  return t.record("ortho_penalty", std::move(out), {mats},
                  [mats, rows, rank](Tape& tp, std::size_t self) {
                    const DenseArray& mv = tp.value(mats);
                    const DenseArray& g = tp.grad(Var{self});
                    DenseArray& gm = tp.grad_buffer(mats);
                    std::vector<double> p(rank * rank);
                    for (std::size_t i = 0; i < mv.rows(); ++i) {
                      const double* a = mv.row(i).data();
                      gram_minus_identity(a, rows, rank, p.data());
                      double* ga = gm.row(i).data();
                      // d/dA ||A^T A - I||^2 = 4 A P (P symmetric).
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t j = 0; j < rank; ++j) {
                          double s = 0.0;
                          for (std::size_t q = 0; q < rank; ++q)
                            s += a[r * rank + q] * p[q * rank + j];
                          ga[r * rank + j] += 4.0 * g[i] * s;
                        }
                      }
                    }
                  });
}

Var sum_squares_rows(Tape& t, Var a) {
  const DenseArray& av = t.value(a);
  DenseArray out = DenseArray::matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) out[i] = dot(av.row(i), av.row(i));
  return t.record("sum_squares_rows", std::move(out), {a}, [a](Tape& tp, std::size_t self) {
    const DenseArray& av = tp.value(a);
    const DenseArray& g = tp.grad(Var{self});
    DenseArray& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < av.rows(); ++i) {
      auto ai = av.row(i);
      auto gai = ga.row(i);
      for (std::size_t j = 0; j < ai.size(); ++j) gai[j] += 2.0 * g[i] * ai[j];
    }
  });
}

Var sum_all(Tape& t, Var a) {
  double s = 0.0;
  for (double x : t.value(a).values()) s += x;
  return t.record("sum_all", DenseArray::scalar(s), {a}, [a](Tape& tp, std::size_t self) {
    const double g = tp.grad(Var{self})[0];
    for (double& x : tp.grad_buffer(a).values()) x += g;
  });
}

Var mean_all(Tape& t, Var a) {
  const DenseArray& av = t.value(a);
  require(av.size() > 0, "mean_all: empty input");
  double s = 0.0;
  for (double x : av.values()) s += x;
  const double n = static_cast<double>(av.size());
  return t.record("mean_all", DenseArray::scalar(s / n), {a}, [a, n](Tape& tp, std::size_t self) {
    const double g = tp.grad(Var{self})[0] / n;
    for (double& x : tp.grad_buffer(a).values()) x += g;
  });
}

Var softmax_xent_diag(Tape& t, Var logits) {
  const DenseArray& z = t.value(logits);
  require(z.rows() == z.cols() && z.rows() > 0,
          "softmax_xent_diag: expected a square matrix, got " + z.shape_string());
  const std::size_t n = z.rows();
  DenseArray probs = DenseArray::matrix(n, n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto zi = z.row(i);
    const double m = *std::max_element(zi.begin(), zi.end());
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs(i, j) = std::exp(zi[j] - m);
      s += probs(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) probs(i, j) /= s;
    loss += (m + std::log(s)) - zi[i];
  }
  loss /= static_cast<double>(n);
  return t.record("softmax_xent_diag", DenseArray::scalar(loss), {logits},
                  [logits, probs = std::move(probs), n](Tape& tp, std::size_t self) {
                    const double g = tp.grad(Var{self})[0] / static_cast<double>(n);
                    DenseArray& gz = tp.grad_buffer(logits);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < n; ++j)
                        gz(i, j) += g * (probs(i, j) - (i == j ? 1.0 : 0.0));
                  });
}

Var detach(Tape& t, Var a) { return t.constant(t.value(a)); }

}  // namespace mtr::ops

#include "widthlab/diagnostics.hpp"

#include <cmath>

namespace widthlab {

namespace {

const Matrix& require(const ForwardTrace* t, const char* which) {
  if (t == nullptr) throw std::invalid_argument(std::string("probe snapshot missing ") + which);
  return t->input;
}

double l2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

double mean_row_rms(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += rms_norm(m.row(i));
  return s / static_cast<double>(m.rows());
}

RccTerms rcc(const ProbeSnapshot& snap, std::size_t layer) {
  require(snap.initial, "initial trace");
  require(snap.current, "current trace");
  if (snap.net == nullptr) throw std::invalid_argument("probe snapshot missing network");
  const Network& net = *snap.net;
  if (layer >= net.depth()) throw std::out_of_range("rcc: layer index out of range");

  const Matrix& x0 = snap.initial->layer_input(layer);
  const Matrix& xt = snap.current->layer_input(layer);
  const Matrix& h0 = snap.initial->layer_output(layer);
  const Matrix& ht = snap.current->layer_output(layer);

  const Matrix eff = matmul_nt(xt, net.delta(layer));
  const bool has_prop = layer > 0;
  const Matrix prop = has_prop ? matmul_nt(xt - x0, net.initial_weight(layer))
                               : Matrix(eff.rows(), eff.cols());
  const Matrix dh = ht - h0;

  RccTerms out;
  out.effective_rms = mean_row_rms(eff);
  out.propagating_rms = has_prop ? mean_row_rms(prop) : 0.0;
  out.delta_h_rms = mean_row_rms(dh);
  Vector resid(eff.cols());
  for (std::size_t i = 0; i < eff.rows(); ++i) {
    for (std::size_t j = 0; j < eff.cols(); ++j) resid[j] = eff(i, j) + prop(i, j) - dh(i, j);
    const double scale = l2(eff.row(i)) + l2(prop.row(i));
    const double r = l2(resid);
    if (scale > 0.0) out.max_relative_residual = std::max(out.max_relative_residual, r / scale);
    else if (r > 0.0) out.max_relative_residual = std::max(out.max_relative_residual, 1.0);
  }
  return out;
}

namespace {

std::optional<double> alignment_with(const Matrix& a, const Matrix& x_batch, double a_norm) {
  if (x_batch.cols() != a.cols()) throw ShapeError("alignment: x dimension does not match A");
  if (!(a_norm > 0.0)) return std::nullopt;
  const Matrix ax = matmul_nt(x_batch, a);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < x_batch.rows(); ++i) {
    const double xr = rms_norm(x_batch.row(i));
    if (!(xr > 0.0)) continue;
    sum += rms_norm(ax.row(i)) / (a_norm * xr);
    ++used;
  }
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used);
}

}  // namespace

std::optional<double> alignment_rms(const Matrix& a, const Matrix& x_batch) {
  return alignment_with(a, x_batch, rms_matrix_norm(a));
}

std::optional<double> alignment_op(const Matrix& a, const Matrix& x_batch,
                                   std::optional<double> op_norm) {
  const double norm = op_norm ? *op_norm : rms_op_norm(a).value;
  return alignment_with(a, x_batch, norm);
}

std::optional<double> effective_rank(const Matrix& dw) {
  const double fro = frobenius_norm(dw);
  if (!(fro > 0.0)) return std::nullopt;
  const double s = spectral_norm(dw).value;
  if (!(s > 0.0)) return std::nullopt;
  return fro / s;
}

double activation_sparsity(const Matrix& x) {
  std::size_t zeros = 0;
  for (double v : x.values())
    if (v == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(x.size());
}

CosineResult activation_cosine(const Matrix& x0, const Matrix& xt) {
  if (x0.rows() != xt.rows() || x0.cols() != xt.cols())
    throw ShapeError("activation_cosine: shape mismatch");
  CosineResult out;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    const double n0 = l2(x0.row(i));
    const double nt = l2(xt.row(i));
    if (!(n0 > 0.0) || !(nt > 0.0)) {
      ++out.skipped;
      continue;
    }
    sum += dot(x0.row(i), xt.row(i)) / (n0 * nt);
    ++used;
  }
  if (used > 0) out.mean = sum / static_cast<double>(used);
  return out;
}

double InitialOpNormCache::get(const Network& net, std::size_t layer,
                               const PowerIterationOptions& opts) {
  if (values_.size() < net.depth()) values_.resize(net.depth());
  auto& slot = values_.at(layer);
  if (!slot) slot = rms_op_norm(net.initial_weight(layer), opts).value;
  return *slot;
}

DiagnosticRecord diagnose(const ProbeSnapshot& snap, const DiagnosticOptions& opts,
                          InitialOpNormCache& cache, const std::vector<double>& grad_rms) {
  require(snap.initial, "initial trace");
  require(snap.current, "current trace");
  const Network& net = *snap.net;
  DiagnosticRecord rec;
  rec.step = snap.step;
  rec.logit_rms = mean_row_rms(snap.current->logits);
  rec.delta_logit_rms = mean_row_rms(snap.current->logits - snap.initial->logits);

  for (std::size_t l = 0; l < net.depth(); ++l) {
    LayerDiagnostics d;
    d.layer = l;
    d.rcc = rcc(snap, l);
    const Matrix dw = net.delta(l);
    const Matrix& xt = snap.current->layer_input(l);
    const Matrix dx = xt - snap.initial->layer_input(l);
    d.delta_w_rms = rms_matrix_norm(dw);
    d.delta_x_rms = mean_row_rms(dx);
    d.align_rms_update = alignment_rms(dw, xt);
    d.align_rms_init = alignment_rms(net.initial_weight(l), dx);
    if (opts.op_norms) {
      d.align_op_update = alignment_op(dw, xt, rms_op_norm(dw, opts.power).value);
      d.align_op_init =
          alignment_op(net.initial_weight(l), dx, cache.get(net, l, opts.power));
      d.effective_rank = effective_rank(dw);
    }
    if (l + 1 < net.depth()) {
      d.sparsity = activation_sparsity(snap.current->post[l]);
      d.cosine = activation_cosine(snap.initial->post[l], snap.current->post[l]).mean;
    }
    if (l < grad_rms.size()) d.grad_rms = grad_rms[l];
    rec.layers.push_back(std::move(d));
  }
  return rec;
}

}  // namespace widthlab

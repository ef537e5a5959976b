#include "widthlab/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace widthlab {

namespace {

bool weights_finite(const Network& net) {
  for (const Matrix& w : net.weights())
    if (!all_finite(w)) return false;
  return true;
}

void validate_options(const Network& net, const OptimizerState& opt, const ParamSpec& spec,
                      const Dataset& data, const TrainOptions& o) {
  if (o.steps < 0) throw ConfigError("train: steps must be >= 0");
  if (o.batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (o.probe_size == 0) throw ConfigError("train: probe_size must be >= 1");
  if (o.log_every < 1) throw ConfigError("train: log_every must be >= 1");
  if (opt.kind != spec.optimizer)
    throw ConfigError("train: optimizer state does not match the parameterization");
  if (spec.layers.size() != net.depth())
    throw ConfigError("train: parameterization depth does not match the network");
  if (data.d_in() != net.arch().d_in || data.d_out() != net.arch().d_out)
    throw ShapeError("train: dataset dimensions do not match the network");
}

}  // namespace

RunMetrics train(Network& net, OptimizerState& opt, const ParamSpec& spec, const Dataset& data,
                 const TrainOptions& opts) {
  validate_options(net, opt, spec, data, opts);
  std::vector<std::int64_t> schedule = opts.probe_steps;
  schedule.push_back(0);
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());

  const Dataset probe = data.slice(0, std::min(opts.probe_size, data.samples()));
  const ForwardTrace probe0 = forward(net, probe.inputs);
  InitialOpNormCache op_cache;
  RunMetrics run;
  std::vector<double> last_grad_rms;
  auto next_probe = schedule.begin();

  auto take_probe = [&](std::int64_t step) {
    while (next_probe != schedule.end() && *next_probe < step) ++next_probe;
    if (next_probe == schedule.end() || *next_probe != step) return;
    const ForwardTrace current = step == 0 ? probe0 : forward(net, probe.inputs);
    const ProbeSnapshot snap{step, &net, &probe0, &current};
    run.probes.push_back(diagnose(snap, opts.diagnostics, op_cache, last_grad_rms));
  };

  take_probe(0);
  BatchStream stream(data);
  const bool softmax_loss = opts.loss != LossKind::kMse;

  for (std::int64_t t = 1; t <= opts.steps; ++t) {
    const Dataset batch = stream.next(opts.batch_size);
    const ForwardTrace trace = forward(net, batch.inputs);
    LossResult lr = loss_and_chi(opts.loss, trace.logits, batch.targets);

    StepMetrics m;
    m.step = t;
    m.loss = lr.loss;
    bool diverged = lr.diverged || trace.diverged || !std::isfinite(lr.loss) ||
                    (softmax_loss && lr.loss > opts.ce_divergence_threshold);
    if (!diverged) {
      m.accuracy = accuracy(trace.logits, batch.targets);
      m.logit_rms = mean_row_rms(trace.logits);
      m.chi_rms = mean_row_rms(lr.chi);
      for (double v : lr.chi.values()) m.chi_max_abs = std::max(m.chi_max_abs, std::abs(v));
      run.max_abs_chi = std::max(run.max_abs_chi, m.chi_max_abs);

      const std::vector<Matrix> grads = backward(net, trace, lr.chi);
      for (const Matrix& g : grads) m.grad_rms.push_back(rms_matrix_norm(g));
      diverged = !apply_update(net, opt, grads, spec) || !weights_finite(net);
      last_grad_rms = m.grad_rms;
    }
    m.diverged = diverged;
    if (diverged || t % opts.log_every == 0 || t == opts.steps) run.steps.push_back(m);
    if (diverged) {
      run.diverged = true;
      run.divergence_step = t;
      return run;
    }
    run.steps_completed = t;
    take_probe(t);
  }
  return run;
}

Evaluation evaluate(const Network& net, const Dataset& data, LossKind loss, std::size_t chunk) {
  if (chunk == 0) throw ConfigError("evaluate: chunk must be >= 1");
  Evaluation ev;
  double loss_sum = 0.0;
  double hits = 0.0;
  for (std::size_t begin = 0; begin < data.samples(); begin += chunk) {
    const std::size_t count = std::min(chunk, data.samples() - begin);
    const Dataset part = data.slice(begin, count);
    const ForwardTrace trace = forward(net, part.inputs);
    const LossResult lr = loss_and_chi(loss, trace.logits, part.targets);
    if (lr.diverged) {
      ev.diverged = true;
      ev.loss = lr.loss;
      ev.accuracy = 0.0;
      return ev;
    }
    loss_sum += lr.loss * static_cast<double>(count);
    hits += accuracy(trace.logits, part.targets) * static_cast<double>(count);
  }
  const double n = static_cast<double>(data.samples());
  ev.loss = loss_sum / n;
  ev.accuracy = hits / n;
  return ev;
}

}  // namespace widthlab

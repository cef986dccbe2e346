#include "meshadv/net.hpp"

#include <cmath>

#include "meshadv/rng.hpp"

namespace meshadv {

namespace {

constexpr double kProbFloor = 1e-12;

double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

MatrixXd glorot(int rows, int cols, Rng& rng) {
  const double lim = glorot_limit(cols, rows);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-lim, lim);
  }
  return m;
}

Affine init_affine(int out, int in, Rng& rng) {
  return Affine{glorot(out, in, rng), VectorXd::Zero(out)};
}

VectorXd sigmoid(const VectorXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

VectorXd softmax(const VectorXd& logits) {
  const VectorXd shifted = (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

MatrixXd to_features(const NetSpec& spec, const Eigen::MatrixX3d& coords) {
  if (!spec.delta_features) return coords;
  MatrixXd feats = coords;
  for (int t = static_cast<int>(coords.rows()) - 1; t >= 1; --t) {
    feats.row(t) = coords.row(t) - coords.row(t - 1);
  }
  return feats;
}

}  // namespace

void validate_prediction(const PredictionVector& p) {
  if (p.size() == 0) throw DimensionMismatch("empty prediction vector");
  if (p.minCoeff() < 0.0 || std::abs(p.sum() - 1.0) > 1e-6) {
    throw DimensionMismatch("prediction vector is not a probability distribution");
  }
}

ImitatorParams init_params(const NetSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2) throw ConfigError("NetSpec.classes must be >= 2");
  if (spec.lift1 < 1 || spec.hidden < 1 || spec.rnn_layers < 1) {
    throw ConfigError("NetSpec widths and depth must be positive");
  }
  Rng rng(seed);
  ImitatorParams p;
  p.spec = spec;
  p.fc1 = init_affine(spec.lift1, spec.input_dim, rng);
  p.fc2 = init_affine(spec.hidden, spec.lift1, rng);
  p.rnn.resize(spec.rnn_layers);
  for (GruLayer& g : p.rnn) {
    g.Wz = glorot(spec.hidden, spec.hidden, rng);
    g.Uz = glorot(spec.hidden, spec.hidden, rng);
    g.Wr = glorot(spec.hidden, spec.hidden, rng);
    g.Ur = glorot(spec.hidden, spec.hidden, rng);
    g.Wc = glorot(spec.hidden, spec.hidden, rng);
    g.Uc = glorot(spec.hidden, spec.hidden, rng);
    g.bz = VectorXd::Zero(spec.hidden);
    g.br = VectorXd::Zero(spec.hidden);
    g.bc = VectorXd::Zero(spec.hidden);
  }
  p.fc_out = init_affine(spec.classes, spec.hidden, rng);
  return p;
}

ImitatorParams zeros_like(const ImitatorParams& params) {
  ImitatorParams z = params;
  visit_tensors(z, [](const std::string&, auto& t) { t.setZero(); });
  return z;
}

ForwardTrace forward(const ImitatorParams& params, const Eigen::MatrixX3d& coords) {
  const NetSpec& spec = params.spec;
  const int L = static_cast<int>(coords.rows());
  if (L < 1) throw DimensionMismatch("walk must have at least one step");

  ForwardTrace tr;
  tr.inputs = to_features(spec, coords);
  tr.a1.resize(L, spec.lift1);
  tr.h1.resize(L, spec.lift1);
  tr.a2.resize(L, spec.hidden);
  tr.h2.resize(L, spec.hidden);
  tr.layers.resize(spec.rnn_layers);
  for (auto& lt : tr.layers) {
    lt.z.resize(L, spec.hidden);
    lt.r.resize(L, spec.hidden);
    lt.c.resize(L, spec.hidden);
    lt.h.resize(L, spec.hidden);
  }

  for (int t = 0; t < L; ++t) {
    const VectorXd a1 = params.fc1.W * tr.inputs.row(t).transpose() + params.fc1.b;
    const VectorXd h1 = a1.cwiseMax(0.0);
    const VectorXd a2 = params.fc2.W * h1 + params.fc2.b;
    VectorXd x = a2.cwiseMax(0.0);
    tr.a1.row(t) = a1.transpose();
    tr.h1.row(t) = h1.transpose();
    tr.a2.row(t) = a2.transpose();
    tr.h2.row(t) = x.transpose();
    for (int l = 0; l < spec.rnn_layers; ++l) {
      const GruLayer& g = params.rnn[l];
      auto& lt = tr.layers[l];
      const VectorXd h_prev = (t == 0) ? VectorXd::Zero(spec.hidden).eval()
                                       : lt.h.row(t - 1).transpose().eval();
      const VectorXd z = sigmoid(g.Wz * x + g.Uz * h_prev + g.bz);
      const VectorXd r = sigmoid(g.Wr * x + g.Ur * h_prev + g.br);
      const VectorXd c = (g.Wc * x + g.Uc * r.cwiseProduct(h_prev) + g.bc)
                             .unaryExpr([](double v) { return std::tanh(v); });
      const VectorXd h =
          (VectorXd::Ones(spec.hidden) - z).cwiseProduct(h_prev) + z.cwiseProduct(c);
      lt.z.row(t) = z.transpose();
      lt.r.row(t) = r.transpose();
      lt.c.row(t) = c.transpose();
      lt.h.row(t) = h.transpose();
      x = h;
    }
  }

  tr.logits = params.fc_out.W * tr.layers.back().h.row(L - 1).transpose() + params.fc_out.b;
  tr.prediction = softmax(tr.logits);
  return tr;
}

double kld(const PredictionVector& ref, const PredictionVector& pred) {
  if (ref.size() != pred.size()) throw DimensionMismatch("KLD size mismatch");
  double sum = 0.0;
  for (int i = 0; i < ref.size(); ++i) {
    if (ref[i] <= 0.0) continue;  // 0 * ln(0/x) is 0
    // computed as r*(ln r - ln p) so a one-hot reference reduces to exactly
    // -ln(pred_k), with ln(1) contributing a true zero
    sum += ref[i] * (std::log(ref[i]) - std::log(std::max(pred[i], kProbFloor)));
  }
  return sum;
}

double loss_value(LossKind kind, const PredictionVector& ref, const PredictionVector& pred) {
  if (kind == LossKind::KLD) return kld(ref, pred);
  // cross-entropy with the target distribution (one-hot in practice)
  double sum = 0.0;
  for (int i = 0; i < ref.size(); ++i) {
    if (ref[i] <= 0.0) continue;
    sum -= ref[i] * std::log(std::max(pred[i], kProbFloor));
  }
  return sum;
}

int argmax(const PredictionVector& p) {
  Eigen::Index idx = 0;
  p.maxCoeff(&idx);
  return static_cast<int>(idx);
}

PredictionVector one_hot(int label, int classes) {
  if (label < 0 || label >= classes) throw DimensionMismatch("label out of range");
  PredictionVector v = VectorXd::Zero(classes);
  v[label] = 1.0;
  return v;
}

Gradients backward(const ImitatorParams& params, const Eigen::MatrixX3d& coords,
                   const ForwardTrace& trace, const PredictionVector& ref) {
  const NetSpec& spec = params.spec;
  const int L = trace.length();
  if (ref.size() != spec.classes) throw DimensionMismatch("reference size != classes");
  if (static_cast<int>(coords.rows()) != L) throw DimensionMismatch("coords/trace length mismatch");

  Gradients g;
  g.params = zeros_like(params);
  g.wrt_coords = Eigen::MatrixX3d::Zero(L, 3);
  MatrixXd dinputs = MatrixXd::Zero(L, spec.input_dim);

  // Both KLD(ref || softmax) and cross-entropy share d loss / d logits = p - ref.
  const VectorXd dlogits = trace.prediction - ref;
  g.params.fc_out.W += dlogits * trace.layers.back().h.row(L - 1);
  g.params.fc_out.b += dlogits;

  // carry[l]: gradient flowing into layer l's hidden state from step t+1
  std::vector<VectorXd> carry(spec.rnn_layers, VectorXd::Zero(spec.hidden));

  for (int t = L - 1; t >= 0; --t) {
    VectorXd dx_above = VectorXd::Zero(spec.hidden);  // from the layer above at this step
    for (int l = spec.rnn_layers - 1; l >= 0; --l) {
      const GruLayer& gr = params.rnn[l];
      const auto& lt = trace.layers[l];
      VectorXd dh = carry[l] + dx_above;
      if (l == spec.rnn_layers - 1 && t == L - 1) {
        dh += params.fc_out.W.transpose() * dlogits;
      }
      const VectorXd z = lt.z.row(t).transpose();
      const VectorXd r = lt.r.row(t).transpose();
      const VectorXd c = lt.c.row(t).transpose();
      const VectorXd h_prev = (t == 0) ? VectorXd::Zero(spec.hidden).eval()
                                       : lt.h.row(t - 1).transpose().eval();
      const VectorXd x = (l == 0) ? trace.h2.row(t).transpose().eval()
                                  : trace.layers[l - 1].h.row(t).transpose().eval();

      const VectorXd dz = dh.cwiseProduct(c - h_prev);
      const VectorXd dc = dh.cwiseProduct(z);
      VectorXd dh_prev = dh.cwiseProduct(VectorXd::Ones(spec.hidden) - z);

      const VectorXd dac = dc.cwiseProduct(VectorXd::Ones(spec.hidden) - c.cwiseProduct(c));
      const VectorXd s = gr.Uc.transpose() * dac;  // wrt r .* h_prev
      const VectorXd dr = s.cwiseProduct(h_prev);
      dh_prev += s.cwiseProduct(r);
      const VectorXd dar = dr.cwiseProduct(r).cwiseProduct(VectorXd::Ones(spec.hidden) - r);
      const VectorXd daz = dz.cwiseProduct(z).cwiseProduct(VectorXd::Ones(spec.hidden) - z);

      GruLayer& gg = g.params.rnn[l];
      gg.Wz += daz * x.transpose();
      gg.Uz += daz * h_prev.transpose();
      gg.bz += daz;
      gg.Wr += dar * x.transpose();
      gg.Ur += dar * h_prev.transpose();
      gg.br += dar;
      gg.Wc += dac * x.transpose();
      gg.Uc += dac * r.cwiseProduct(h_prev).transpose();
      gg.bc += dac;

      dh_prev += gr.Uz.transpose() * daz + gr.Ur.transpose() * dar;
      carry[l] = dh_prev;
      dx_above = gr.Wz.transpose() * daz + gr.Wr.transpose() * dar + gr.Wc.transpose() * dac;
    }
    // through the FC lift
    const VectorXd a2 = trace.a2.row(t).transpose();
    const VectorXd da2 =
        dx_above.cwiseProduct((a2.array() > 0.0).cast<double>().matrix());
    g.params.fc2.W += da2 * trace.h1.row(t);
    g.params.fc2.b += da2;
    const VectorXd dh1 = params.fc2.W.transpose() * da2;
    const VectorXd a1 = trace.a1.row(t).transpose();
    const VectorXd da1 = dh1.cwiseProduct((a1.array() > 0.0).cast<double>().matrix());
    g.params.fc1.W += da1 * trace.inputs.row(t);
    g.params.fc1.b += da1;
    dinputs.row(t) = (params.fc1.W.transpose() * da1).transpose();
  }

  if (!spec.delta_features) {
    g.wrt_coords = dinputs;
  } else {
    // input[0] = c[0]; input[t] = c[t] - c[t-1]
    for (int t = 0; t < L; ++t) {
      g.wrt_coords.row(t) += dinputs.row(t);
      if (t >= 1) g.wrt_coords.row(t - 1) -= dinputs.row(t);
    }
  }
  return g;
}

GradCheckReport grad_check(const ImitatorParams& params, const Eigen::MatrixX3d& coords,
                           LossKind kind, const PredictionVector& ref, double rel_tolerance,
                           std::uint64_t seed, int min_samples) {
  const double step = 1e-4;
  ImitatorParams work = params;
  auto eval_loss = [&]() {
    return loss_value(kind, ref, forward(work, coords).prediction);
  };
  const ForwardTrace trace = forward(params, coords);
  const Gradients analytic = backward(params, coords, trace, ref);

  GradCheckReport report;
  const double base_loss = loss_value(kind, ref, trace.prediction);
  // an entry passes if it is within 1e-5 absolute or rel_tolerance relative;
  // entries whose perturbation straddles a ReLU kink (the two one-sided
  // slopes disagree) are skipped — central differences are meaningless there
  auto record = [&](const std::string& name, double up, double down, double exact) {
    const double forward_slope = (up - base_loss) / step;
    const double backward_slope = (base_loss - down) / step;
    if (std::abs(forward_slope - backward_slope) >
        1e-3 + 0.01 * std::max(std::abs(forward_slope), std::abs(backward_slope))) {
      return;
    }
    const double numeric = (up - down) / (2 * step);
    const double abs_err = std::abs(numeric - exact);
    const double rel_err = abs_err / std::max({std::abs(numeric), std::abs(exact), 1e-8});
    if (abs_err > 1e-5 && rel_err > rel_tolerance) {
      ++report.violations;
      if (rel_err > report.max_rel_err) report.worst = name;
    }
    report.max_rel_err = std::max(report.max_rel_err, rel_err);
    report.max_abs_err = std::max(report.max_abs_err, abs_err);
    ++report.checked;
  };

  // all input coordinates
  Eigen::MatrixX3d c = coords;
  for (int t = 0; t < c.rows(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const double saved = c(t, k);
      c(t, k) = saved + step;
      const double up = loss_value(kind, ref, forward(params, c).prediction);
      c(t, k) = saved - step;
      const double down = loss_value(kind, ref, forward(params, c).prediction);
      c(t, k) = saved;
      record("coords(" + std::to_string(t) + "," + std::to_string(k) + ")", up, down,
             analytic.wrt_coords(t, k));
    }
  }

  // flat list of parameter entries, subsampled
  struct Entry {
    std::string name;
    double* value;
    double exact;
  };
  std::vector<Entry> entries;
  {
    std::vector<std::pair<std::string, double*>> mut;
    visit_tensors(work, [&](const std::string& name, auto& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        mut.emplace_back(name + "[" + std::to_string(i) + "]", t.data() + i);
      }
    });
    std::vector<const double*> exact;
    visit_tensors(analytic.params, [&](const std::string&, auto& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i) exact.push_back(t.data() + i);
    });
    entries.reserve(mut.size());
    for (std::size_t i = 0; i < mut.size(); ++i) {
      entries.push_back({mut[i].first, mut[i].second, *exact[i]});
    }
  }
  Rng rng(seed);
  rng.shuffle(entries);
  const std::size_t take = std::min<std::size_t>(entries.size(), min_samples);
  for (std::size_t i = 0; i < take; ++i) {
    const Entry& e = entries[i];
    const double saved = *e.value;
    *e.value = saved + step;
    const double up = eval_loss();
    *e.value = saved - step;
    const double down = eval_loss();
    *e.value = saved;
    record(e.name, up, down, e.exact);
  }

  report.pass = report.violations == 0;
  return report;
}

}  // namespace meshadv

#include "evoem/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "evoem/error.hpp"
#include "evoem/model.hpp"

namespace evoem {

BarsSpec BarsSpec::defaults(ModelKind kind, std::size_t R) {
  BarsSpec s;
  s.R = R;
  s.kind = kind;
  if (kind == ModelKind::kNoisyOr) {
    s.amplitude = 0.8;
    s.background = 0.1;
  } else {
    s.amplitude = 5.0;
    s.background = 0.0;
  }
  return s;
}

void BarsSpec::validate() const {
  if (R < 2) throw ConfigError("bars grid side R must be at least 2");
  if (amplitude == background || (kind != ModelKind::kNoisyOr && -amplitude == background))
    throw ConfigError("bar amplitude must differ from the background");
  if (kind == ModelKind::kNoisyOr) {
    if (amplitude < 0.0 || amplitude > 1.0 || background < 0.0 || background > 1.0)
      throw ConfigError("noisy-OR bar amplitude and background must lie in [0, 1]");
  }
  if (!(prior() > 0.0 && prior() < 1.0)) throw ConfigError("bars prior must lie in (0, 1)");
  if (!(sigma2_gen > 0.0)) throw ConfigError("bars sigma2 must be positive");
  if (!(psi_gen > 0.0)) throw ConfigError("bars slab variance must be positive");
}

Eigen::MatrixXd bars_dictionary(const BarsSpec& spec) {
  spec.validate();
  const auto R = static_cast<Eigen::Index>(spec.R);
  Eigen::MatrixXd W = Eigen::MatrixXd::Constant(R * R, 2 * R, spec.background);
  Rng rng = make_stream(spec.seed, StreamTag::kBars);
  for (Eigen::Index h = 0; h < 2 * R; ++h) {
    double a = spec.amplitude;
    if (spec.kind != ModelKind::kNoisyOr && uniform01(rng) < 0.5) a = -a;
    for (Eigen::Index k = 0; k < R; ++k) {
      const Eigen::Index d = h < R ? h * R + k : k * R + (h - R);
      W(d, h) = a;
    }
  }
  return W;
}

ModelParams bars_ground_truth(const BarsSpec& spec) {
  const Eigen::MatrixXd W = bars_dictionary(spec);
  const auto H = static_cast<Eigen::Index>(spec.H_gen());
  switch (spec.kind) {
    case ModelKind::kNoisyOr:
      return NoisyOrParams{Eigen::VectorXd::Constant(H, spec.prior()), W};
    case ModelKind::kBsc:
      return BscParams{spec.prior(), spec.sigma2_gen, W};
    case ModelKind::kSssc: {
      SsscParams p;
      p.pi = Eigen::VectorXd::Constant(H, spec.prior());
      p.sigma2 = spec.sigma2_gen;
      p.W = W;
      p.mu = Eigen::VectorXd::Constant(H, spec.mu_gen);
      p.Psi = spec.psi_gen * Eigen::MatrixXd::Identity(H, H);
      return p;
    }
  }
  throw ConfigError("bars_ground_truth: unknown model kind");
}

BarsData generate_bars_dataset(const BarsSpec& spec, std::size_t n, Rng& rng) {
  BarsData out;
  out.truth = bars_ground_truth(spec);
  SampleResult s = sample(out.truth, n, rng);
  out.data = std::move(s.data);
  out.latents = std::move(s.latents);
  return out;
}

std::size_t RecoveryReport::recovered(double threshold) const {
  std::size_t k = 0;
  for (const auto& m : matches)
    if (m.correlation >= threshold) ++k;
  return k;
}

void RecoveryReport::write_csv(std::ostream& out) const {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17);
  s << "truth_index,learned_index,correlation,sign,pi_truth,pi_learned\n";
  for (const auto& m : matches)
    s << m.truth_index << ',' << m.learned_index << ',' << m.correlation << ',' << m.sign << ',' << m.pi_truth << ','
      << m.pi_learned << '\n';
  out << s.str();
}

void RecoveryReport::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_csv(out);
}

double normalized_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd x = a.array() - a.mean();
  const Eigen::VectorXd y = b.array() - b.mean();
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

namespace {

struct Dictionary {
  const Eigen::MatrixXd* W;
  std::vector<double> pi;
};

Dictionary dictionary_of(const ModelParams& p) {
  return std::visit(
      [](const auto& q) -> Dictionary {
        using T = std::decay_t<decltype(q)>;
        Dictionary d{&q.W, {}};
        if constexpr (std::is_same_v<T, BscParams>)
          d.pi.assign(static_cast<std::size_t>(q.W.cols()), q.pi);
        else
          d.pi.assign(q.pi.data(), q.pi.data() + q.pi.size());
        return d;
      },
      p);
}

}  // namespace

RecoveryReport score_recovery(const ModelParams& learned, const ModelParams& truth) {
  const Dictionary L = dictionary_of(learned), T = dictionary_of(truth);
  if (L.W->rows() != T.W->rows()) throw DimensionError("score_recovery: dictionaries differ in D");
  const std::size_t HL = static_cast<std::size_t>(L.W->cols()), HT = static_cast<std::size_t>(T.W->cols());
  if (HL < HT) throw DimensionError("score_recovery: learned H smaller than ground-truth H");
  const bool signed_fields = kind_of(truth) != ModelKind::kNoisyOr;

  std::vector<double> corr(HT * HL);
  for (std::size_t t = 0; t < HT; ++t)
    for (std::size_t l = 0; l < HL; ++l)
      corr[t * HL + l] = normalized_correlation(T.W->col(static_cast<Eigen::Index>(t)),
                                                L.W->col(static_cast<Eigen::Index>(l)));

  RecoveryReport report;
  std::vector<bool> used_t(HT, false), used_l(HL, false);
  for (std::size_t k = 0; k < HT; ++k) {
    double best = -2.0;
    std::size_t bt = 0, bl = 0;
    for (std::size_t t = 0; t < HT; ++t) {
      if (used_t[t]) continue;
      for (std::size_t l = 0; l < HL; ++l) {
        if (used_l[l]) continue;
        const double c = signed_fields ? std::abs(corr[t * HL + l]) : corr[t * HL + l];
        if (c > best) {
          best = c;
          bt = t;
          bl = l;
        }
      }
    }
    used_t[bt] = used_l[bl] = true;
    RecoveryMatch m;
    m.truth_index = bt;
    m.learned_index = bl;
    m.sign = signed_fields && corr[bt * HL + bl] < 0.0 ? -1 : 1;
    m.correlation = best;
    m.pi_truth = T.pi[bt];
    m.pi_learned = L.pi[bl];
    report.matches.push_back(m);
  }
  std::sort(report.matches.begin(), report.matches.end(),
            [](const RecoveryMatch& a, const RecoveryMatch& b) { return a.truth_index < b.truth_index; });
  report.min_correlation = 1.0;
  for (const auto& m : report.matches) {
    report.min_correlation = std::min(report.min_correlation, m.correlation);
    const double e = std::abs(m.pi_learned - m.pi_truth);
    report.mean_abs_pi_error += e / static_cast<double>(HT);
    report.max_abs_pi_error = std::max(report.max_abs_pi_error, e);
  }
  return report;
}

}  // namespace evoem

#include "hybridrisk/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace hybridrisk::ensemble {

VotingEnsemble::VotingEnsemble(std::string name, std::vector<Member> members)
    : name_(std::move(name)), members_(std::move(members)) {
  if (members_.size() < 2) {
    throw Error(ErrorKind::config, "a voting ensemble needs at least two members");
  }
  double total = 0.0;
  for (const auto& m : members_) {
    if (!m.model) {
      throw Error(ErrorKind::config, "ensemble member without a model");
    }
    if (!(m.weight >= 0.0) || !std::isfinite(m.weight)) {
      throw Error(ErrorKind::config, "ensemble weights must be finite and non-negative");
    }
    if (m.model->n_features() != members_.front().model->n_features()) {
      throw Error(ErrorKind::dimension_mismatch, "ensemble members disagree on feature count");
    }
    total += m.weight;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorKind::config, "ensemble weights must have a positive sum");
  }
  for (auto& m : members_) {
    m.weight /= total;
  }
}

std::vector<double> VotingEnsemble::predict_proba(const Matrix& x) const {
  require_features(x, n_features());
  std::vector<std::vector<double>> probs;
  std::vector<double> weights;
  probs.reserve(members_.size());
  for (const auto& m : members_) {
    probs.push_back(m.model->predict_proba(x));
    weights.push_back(m.weight);
  }
  return soft_vote(probs, weights);
}

nlohmann::json VotingEnsemble::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) {
    members.push_back({{"model", std::string(m.model->kind())}, {"weight", m.weight}});
  }
  return {{"type", "voting"}, {"name", name_}, {"mode", "soft"}, {"members", members}};
}

std::vector<double> soft_vote(const std::vector<std::vector<double>>& member_probs,
                              std::span<const double> weights) {
  if (member_probs.empty() || member_probs.size() != weights.size()) {
    throw Error(ErrorKind::dimension_mismatch, "one weight per member is required");
  }
  const std::size_t n = member_probs.front().size();
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::config, "ensemble weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorKind::config, "ensemble weights must have a positive sum");
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t m = 0; m < member_probs.size(); ++m) {
    if (member_probs[m].size() != n) {
      throw Error(ErrorKind::dimension_mismatch, "members scored different row counts");
    }
    const double w = weights[m] / total;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += w * member_probs[m][i];
    }
  }
  // A convex combination cannot leave the members' range, up to rounding.
  for (std::size_t i = 0; i < n; ++i) {
    double lo = member_probs[0][i], hi = member_probs[0][i];
    for (const auto& probs : member_probs) {
      lo = std::min(lo, probs[i]);
      hi = std::max(hi, probs[i]);
    }
    out[i] = std::clamp(out[i], lo, hi);
  }
  return out;
}

std::vector<int> classify(std::span<const double> probs, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorKind::config, "decision threshold must lie in (0, 1)");
  }
  std::vector<int> labels(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    labels[i] = probs[i] >= tau ? 1 : 0;
  }
  return labels;
}

std::vector<int> classify(const VotingEnsemble& ensemble, const Matrix& x, double tau) {
  return classify(ensemble.predict_proba(x), tau);
}

}  // namespace hybridrisk::ensemble

#pragma once

#include <span>
#include <string>
#include <vector>

#include "hybridrisk/model.hpp"

namespace hybridrisk::ensemble {

struct Member {
  ModelPtr model;
  double weight = 1.0;
};

/// Weighted soft vote: p(x) = sum_m w_m p_m(x), weights normalized to sum 1.
class VotingEnsemble final : public ProbabilisticModel {
 public:
  /// Requires >= 2 members, non-negative weights with a positive sum and a
  /// common feature dimension.
  VotingEnsemble(std::string name, std::vector<Member> members);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Member>& members() const noexcept { return members_; }

  std::vector<double> predict_proba(const Matrix& x) const override;
  std::size_t n_features() const override { return members_.front().model->n_features(); }
  std::string_view kind() const override { return "voting"; }
  /// Member kinds and weights; members themselves are serialized separately.
  nlohmann::json to_json() const override;

 private:
  std::string name_;
  std::vector<Member> members_;
};

/// Convex combination of member probability vectors with normalized weights.
std::vector<double> soft_vote(const std::vector<std::vector<double>>& member_probs,
                              std::span<const double> weights);

/// label = 1 iff p >= tau.
std::vector<int> classify(std::span<const double> probs, double tau = 0.5);
std::vector<int> classify(const VotingEnsemble& ensemble, const Matrix& x, double tau = 0.5);

}  // namespace hybridrisk::ensemble

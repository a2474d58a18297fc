#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semswarm/semantic.hpp"
#include "semswarm/swarm.hpp"

namespace semswarm {

struct PromptParamEntry {
  std::string prompt;
  std::array<double, SwarmParams::kDimension> params{};
};

/// Prompt/parameter pairs. File format: JSON array of
/// {"prompt": string, "params": [6 numbers]}.
struct PromptParamDataset {
  static constexpr std::size_t kMinEntries = 10;

  std::vector<PromptParamEntry> entries;

  /// Throws ParseError on malformed JSON and InvalidParameter when a params
  /// vector falls outside its bounds.
  static PromptParamDataset from_json(std::string_view text);
  static PromptParamDataset load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// The dataset shipped with the library.
const PromptParamDataset& bundled_dataset();

struct RidgeFit {
  Eigen::MatrixXd weights;    // features x outputs
  Eigen::VectorXd intercept;  // outputs
  double objective = 0.0;     // sum of squared residuals + lambda * |W|^2
  double residual_ss = 0.0;   // sum of squared residuals
};

/// Ridge regression with an unpenalized intercept, solved exactly from the
/// normal equations (primal when rows > features, dual otherwise).
/// At lambda = 0 a rank-deficient system throws SingularSystem; in the dual
/// case the minimum-norm interpolant is returned when the centered rows are
/// affinely independent.
RidgeFit fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                   double lambda);

struct MappingModel {
  static constexpr double kDefaultLambda = 0.1;

  Eigen::MatrixXd weights;    // 512 x 6
  Eigen::VectorXd intercept;  // 6
  double ridge_lambda = kDefaultLambda;
  double training_loss = 0.0;  // mean squared residual per entry
  std::string embedder_id;

  /// weights^T * embedding + intercept, before clamping.
  std::array<double, SwarmParams::kDimension> predict_raw(std::span<const double> embedding) const;
};

struct PromptEncoding {
  SwarmParams theta_init;
  std::array<double, SwarmParams::kDimension> theta_prompt{};
};

MappingModel train_mapping(const PromptParamDataset& dataset, EmbeddingProvider& text_embedder,
                           double ridge_lambda = MappingModel::kDefaultLambda);

PromptEncoding encode_prompt(const MappingModel& model, std::string_view prompt,
                             EmbeddingProvider& text_embedder);

}  // namespace semswarm

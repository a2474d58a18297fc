#include "semswarm/prompt2param.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "semswarm/errors.hpp"

namespace semswarm {

namespace {

constexpr std::string_view kBundledDatasetJson =
#include "semswarm_bundled_dataset.inc"
    ;

}  // namespace

PromptParamDataset PromptParamDataset::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, std::string("dataset is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError(1, "dataset must be a JSON array");
  PromptParamDataset ds;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    if (!item.is_object() || !item.contains("prompt") || !item.contains("params") ||
        !item["prompt"].is_string() || !item["params"].is_array()) {
      throw ParseError(1, "dataset entry " + std::to_string(i) +
                              " needs a string \"prompt\" and a \"params\" array");
    }
    const auto raw = item["params"].get<std::vector<double>>();
    const auto validated = validate_params(raw);
    if (validated.any_clamped()) {
      throw InvalidParameter("dataset entry " + std::to_string(i) + " (\"" +
                             item["prompt"].get<std::string>() + "\") is out of bounds");
    }
    PromptParamEntry entry;
    entry.prompt = item["prompt"].get<std::string>();
    std::copy(raw.begin(), raw.end(), entry.params.begin());
    ds.entries.push_back(std::move(entry));
  }
  return ds;
}

PromptParamDataset PromptParamDataset::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open dataset " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string PromptParamDataset::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : entries) doc.push_back({{"prompt", e.prompt}, {"params", e.params}});
  return doc.dump(2);
}

const PromptParamDataset& bundled_dataset() {
  static const PromptParamDataset ds = PromptParamDataset::from_json(kBundledDatasetJson);
  return ds;
}

namespace {

constexpr double kRankTolerance = 1e-10;

// Solves sym * X = rhs for a symmetric positive semi-definite matrix, using the
// pseudo-inverse on the non-null eigenspace. Returns the numerical rank.
Eigen::Index solve_psd(const Eigen::MatrixXd& sym, const Eigen::MatrixXd& rhs,
                       Eigen::MatrixXd& solution) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd& vals = es.eigenvalues();
  const double top = vals.cwiseAbs().maxCoeff();
  const double cutoff = kRankTolerance * (top > 0.0 ? top : 1.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(vals.size());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] > cutoff) {
      inv[i] = 1.0 / vals[i];
      ++rank;
    }
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  solution = v * inv.asDiagonal() * (v.transpose() * rhs);
  return rank;
}

}  // namespace

RidgeFit fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                   double lambda) {
  if (features.rows() != targets.rows()) {
    throw DimensionError("feature and target row counts differ");
  }
  if (features.rows() < 2) throw InsufficientData("ridge regression needs at least 2 rows");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidParameter("ridge lambda must be finite and >= 0");
  }
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  const Eigen::RowVectorXd x_mean = features.colwise().mean();
  const Eigen::RowVectorXd y_mean = targets.colwise().mean();
  const Eigen::MatrixXd xc = features.rowwise() - x_mean;
  const Eigen::MatrixXd yc = targets.rowwise() - y_mean;

  RidgeFit fit;
  if (n > d) {
    const Eigen::MatrixXd normal =
        xc.transpose() * xc + lambda * Eigen::MatrixXd::Identity(d, d);
    if (lambda == 0.0) {
      const Eigen::Index rank = solve_psd(normal, xc.transpose() * yc, fit.weights);
      if (rank < d) {
        throw SingularSystem("normal equations are singular at lambda = 0; use lambda > 0");
      }
    } else {
      fit.weights = normal.ldlt().solve(xc.transpose() * yc);
    }
  } else {
    const Eigen::MatrixXd gram = xc * xc.transpose() + lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd alpha;
    if (lambda == 0.0) {
      // Centered rows always span at most n - 1 dimensions.
      const Eigen::Index rank = solve_psd(gram, yc, alpha);
      if (rank < n - 1) {
        throw SingularSystem("embeddings are affinely dependent at lambda = 0; use lambda > 0");
      }
    } else {
      alpha = gram.ldlt().solve(yc);
    }
    fit.weights = xc.transpose() * alpha;
  }
  fit.intercept = (y_mean - x_mean * fit.weights).transpose();
  const Eigen::MatrixXd residual =
      targets - ((features * fit.weights).rowwise() + fit.intercept.transpose());
  fit.residual_ss = residual.squaredNorm();
  fit.objective = fit.residual_ss + lambda * fit.weights.squaredNorm();
  return fit;
}

std::array<double, SwarmParams::kDimension> MappingModel::predict_raw(
    std::span<const double> embedding) const {
  if (static_cast<Eigen::Index>(embedding.size()) != weights.rows()) {
    throw DimensionError("embedding dimension does not match the mapping model");
  }
  const Eigen::Map<const Eigen::VectorXd> e(embedding.data(),
                                            static_cast<Eigen::Index>(embedding.size()));
  const Eigen::VectorXd y = weights.transpose() * e + intercept;
  std::array<double, SwarmParams::kDimension> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[static_cast<Eigen::Index>(i)];
  return out;
}

MappingModel train_mapping(const PromptParamDataset& dataset, EmbeddingProvider& text_embedder,
                           double ridge_lambda) {
  const std::size_t n = dataset.entries.size();
  if (n < PromptParamDataset::kMinEntries) {
    throw DatasetTooSmall("training needs at least 10 entries, got " + std::to_string(n));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(Embedding::kDimension));
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(SwarmParams::kDimension));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& entry = dataset.entries[i];
    const auto validated = validate_params(entry.params);
    if (validated.any_clamped()) {
      throw InvalidParameter("dataset entry \"" + entry.prompt + "\" is out of bounds");
    }
    const Embedding e = embed_text(text_embedder, entry.prompt);
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < Embedding::kDimension; ++k) x(r, static_cast<Eigen::Index>(k)) = e[k];
    for (std::size_t k = 0; k < SwarmParams::kDimension; ++k) {
      y(r, static_cast<Eigen::Index>(k)) = entry.params[k];
    }
  }
  RidgeFit fit = fit_ridge(x, y, ridge_lambda);
  MappingModel model;
  model.weights = std::move(fit.weights);
  model.intercept = std::move(fit.intercept);
  model.ridge_lambda = ridge_lambda;
  model.training_loss = fit.residual_ss / static_cast<double>(n);
  model.embedder_id = text_embedder.model_id();
  return model;
}

PromptEncoding encode_prompt(const MappingModel& model, std::string_view prompt,
                             EmbeddingProvider& text_embedder) {
  if (prompt.empty()) throw EmptyPrompt("prompt is empty");
  const Embedding e = embed_text(text_embedder, prompt);
  const auto raw = model.predict_raw(e.values());
  const auto validated = validate_params(raw);
  PromptEncoding enc;
  enc.theta_init = validated.params;
  enc.theta_prompt = validated.params.to_array();
  return enc;
}

}  // namespace semswarm

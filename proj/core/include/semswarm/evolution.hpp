#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semswarm/cmaes.hpp"
#include "semswarm/errors.hpp"
#include "semswarm/prompt2param.hpp"
#include "semswarm/render.hpp"
#include "semswarm/semantic.hpp"
#include "semswarm/swarm.hpp"

namespace semswarm {

enum class EmbedderKind { kOracle, kRemote };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kOracle;
  std::string endpoint;

  friend bool operator==(const EmbedderSpec&, const EmbedderSpec&) = default;
};

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderSpec& spec);

struct EvolutionConfig {
  std::size_t n_agents = 512;
  std::size_t sim_steps = 240;
  std::size_t frames_per_eval = 3;
  std::size_t generations = 30;
  int image_size = kDefaultImageSize;
  double trail_decay = kDefaultTrailDecay;
  std::size_t trail_frames = kDefaultTrailFrames;
  CmaConfig cma;
  EmbedderSpec embedder;
  std::uint64_t run_seed = 0;
  /// Parallel candidate evaluations per generation; 0 picks the hardware
  /// concurrency. Results do not depend on this value.
  std::size_t workers = 1;

  /// Throws ConfigError.
  void validate() const;
};

struct GenerationRecord {
  std::size_t generation = 0;
  std::vector<double> losses;           // prior-penalized, as passed to the optimizer
  std::vector<double> semantic_losses;  // 1 - cosine, per candidate
  std::vector<std::array<double, SwarmParams::kDimension>> candidate_params;
  std::size_t best_index = 0;
  SwarmParams best_params;
  double best_loss = 0.0;  // min(losses)
  double best_so_far_loss = 0.0;
  double diversity = 0.0;                   // intra-population, drives noise injection
  double cross_generation_diversity = 0.0;  // vs the previous generation's mean embedding
  bool noise_injected = false;
  double sigma = 0.0;  // step size after the update
  std::uint64_t best_frame_digest = 0;
  std::int64_t wall_ms = 0;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct PromptRevision {
  std::size_t generation = 0;
  std::string prompt;

  friend bool operator==(const PromptRevision&, const PromptRevision&) = default;
};

struct RunHistory {
  std::string run_id;
  std::string prompt;
  std::vector<PromptRevision> prompt_revisions;
  SwarmParams theta_init;
  std::array<double, SwarmParams::kDimension> theta_prompt{};
  std::vector<GenerationRecord> records;
  EvolutionConfig config;
  std::string rng_algorithm_id{Rng::kAlgorithmId};
  std::string embedder_id;
  std::optional<BranchOrigin> parent;

  /// The prompt currently steering the run.
  const std::string& current_prompt() const {
    return prompt_revisions.empty() ? prompt : prompt_revisions.back().prompt;
  }
};

/// Simulation seed for candidate `index` of `generation`.
std::uint64_t candidate_seed(std::uint64_t run_seed, std::size_t generation, std::size_t index);

struct CandidateEvaluation {
  double loss = 0.0;           // penalized
  double semantic_loss = 0.0;  // 1 - cosine
  Embedding best_frame_embedding = Embedding::basis(0);
  std::uint64_t frame_digest = 0;
  ImageRGB best_frame;
};

/// Simulates, renders the selected frames with trails, embeds them, and scores
/// the mean frame embedding against the prompt. The best frame is the selected
/// frame most similar to the prompt.
CandidateEvaluation evaluate_candidate(const Candidate& candidate,
                                       const Embedding& prompt_embedding,
                                       std::span<const double> theta_prompt,
                                       const EvolutionConfig& config,
                                       EmbeddingProvider& embedder, std::uint64_t eval_seed);

struct GenerationOutcome {
  GenerationRecord record;
  ImageRGB best_frame;
};

/// Live state of one evolution run: optimizer, prompt embedding and history.
class RunContext {
 public:
  RunContext(std::string_view prompt, EvolutionConfig config, const MappingModel& mapping,
             std::shared_ptr<EmbeddingProvider> embedder, std::string run_id = {});

  /// A run that restarts from candidate `candidate_index` of `generation` in
  /// `parent`, with its own seed stream.
  static RunContext branch(const RunHistory& parent, std::size_t generation,
                           std::size_t candidate_index,
                           std::shared_ptr<EmbeddingProvider> embedder, std::string run_id = {});

  /// ask, evaluate, tell, diversity check, append record.
  GenerationOutcome run_generation();

  /// Swaps the prompt embedding and prior; the optimizer state is kept.
  void refine_prompt(std::string_view new_prompt, const MappingModel& mapping);

  bool finished() const { return history_.records.size() >= history_.config.generations; }

  const RunHistory& history() const { return history_; }
  RunHistory& history() { return history_; }
  const CmaState& state() const { return state_; }
  const Embedding& prompt_embedding() const { return prompt_embedding_; }

 private:
  RunContext(RunHistory history, CmaState state, Embedding prompt_embedding,
             std::shared_ptr<EmbeddingProvider> embedder);

  std::vector<CandidateEvaluation> evaluate_all(const std::vector<Candidate>& candidates);

  RunHistory history_;
  CmaState state_;
  Embedding prompt_embedding_;
  std::shared_ptr<EmbeddingProvider> embedder_;
  std::optional<Embedding> previous_mean_embedding_;
};

/// Restart state for a branch: mean at the chosen candidate, sigma halved,
/// identity covariance, seed derived from (run_seed, generation, index).
/// Throws IndexError for an unknown generation or candidate.
CmaState branch_from(const RunHistory& history, std::size_t generation,
                     std::size_t candidate_index);

/// Raised by evolve when a generation fails; carries the records completed so
/// far and the original error.
class EvolutionAborted : public Error {
 public:
  EvolutionAborted(RunHistory partial, std::exception_ptr cause, const std::string& what)
      : Error(what), partial_(std::move(partial)), cause_(std::move(cause)) {}

  const RunHistory& partial() const { return partial_; }
  std::exception_ptr cause() const { return cause_; }

 private:
  RunHistory partial_;
  std::exception_ptr cause_;
};

using ProgressCallback = std::function<void(const GenerationOutcome&)>;

RunHistory evolve(std::string_view prompt, const EvolutionConfig& config,
                  const MappingModel& mapping, EmbeddingProvider& embedder,
                  const ProgressCallback& on_generation = {});

}  // namespace semswarm

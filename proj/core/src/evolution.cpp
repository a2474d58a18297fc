#include "semswarm/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "semswarm/errors.hpp"
#include "semswarm/remote_embedder.hpp"

namespace semswarm {

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderSpec& spec) {
  if (spec.kind == EmbedderKind::kOracle) return std::make_unique<OracleEmbedder>();
  if (spec.endpoint.empty()) throw ConfigError("remote embedder needs an endpoint");
  return std::make_unique<RemoteEmbedder>(spec.endpoint);
}

void EvolutionConfig::validate() const {
  if (n_agents < 2) throw ConfigError("n_agents must be at least 2");
  if (sim_steps == 0) throw ConfigError("sim_steps must be positive");
  if (frames_per_eval == 0) throw ConfigError("frames_per_eval must be at least 1");
  if (image_size < kMinImageSize) throw ConfigError("image_size must be at least 32");
  if (!(trail_decay >= 0.0 && trail_decay <= 1.0)) throw ConfigError("trail_decay must be in [0, 1]");
  if (cma.dimension != SwarmParams::kDimension) throw ConfigError("cma.dimension must be 6");
  if (embedder.kind == EmbedderKind::kRemote && embedder.endpoint.empty()) {
    throw ConfigError("remote embedder needs an endpoint");
  }
  cma.validate();
}

std::uint64_t candidate_seed(std::uint64_t run_seed, std::size_t generation, std::size_t index) {
  return derive_seed(run_seed, {0x6576616cULL, generation, index});
}

CandidateEvaluation evaluate_candidate(const Candidate& candidate,
                                       const Embedding& prompt_embedding,
                                       std::span<const double> theta_prompt,
                                       const EvolutionConfig& config,
                                       EmbeddingProvider& embedder, std::uint64_t eval_seed) {
  const Trajectory traj =
      run_simulation(candidate.params, config.n_agents, config.sim_steps, eval_seed);
  const auto indices = select_frames(traj, config.frames_per_eval);

  std::vector<Embedding> embeddings;
  std::vector<ImageRGB> images;
  embeddings.reserve(indices.size());
  images.reserve(indices.size());
  for (std::size_t idx : indices) {
    images.push_back(render_with_trail(traj, idx, config.image_size, config.trail_decay,
                                       config.trail_frames));
    FrameView view{traj.frames[idx], candidate.params.max_speed, &images.back()};
    embeddings.push_back(embed_frame(embedder, view));
  }

  const SemanticScore score = semantic_loss(embeddings, prompt_embedding);
  std::size_t best = 0;
  double best_sim = -2.0;
  for (std::size_t k = 0; k < embeddings.size(); ++k) {
    const double sim = cosine_similarity(embeddings[k], prompt_embedding);
    if (sim > best_sim) {
      best_sim = sim;
      best = k;
    }
  }

  CandidateEvaluation out;
  out.semantic_loss = score.loss;
  out.loss = prior_penalized_fitness(score.loss, candidate.params, theta_prompt,
                                     config.cma.prior_lambda);
  out.best_frame_embedding = embeddings[best];
  out.frame_digest = image_digest(images[best]);
  out.best_frame = std::move(images[best]);
  return out;
}

RunContext::RunContext(RunHistory history, CmaState state, Embedding prompt_embedding,
                       std::shared_ptr<EmbeddingProvider> embedder)
    : history_(std::move(history)),
      state_(std::move(state)),
      prompt_embedding_(std::move(prompt_embedding)),
      embedder_(std::move(embedder)) {}

RunContext::RunContext(std::string_view prompt, EvolutionConfig config,
                       const MappingModel& mapping, std::shared_ptr<EmbeddingProvider> embedder,
                       std::string run_id)
    : prompt_embedding_(Embedding::basis(0)), embedder_(std::move(embedder)) {
  if (prompt.empty()) throw EmptyPrompt("prompt is empty");
  config.validate();
  const PromptEncoding enc = encode_prompt(mapping, prompt, *embedder_);
  prompt_embedding_ = embed_text(*embedder_, prompt);

  history_.run_id = std::move(run_id);
  history_.prompt = std::string(prompt);
  history_.theta_init = enc.theta_init;
  history_.theta_prompt = enc.theta_prompt;
  history_.embedder_id = embedder_->model_id();
  if (config.cma.seed == CmaConfig{}.seed) {
    config.cma.seed = derive_seed(config.run_seed, {0x636d61ULL});
  }
  history_.config = config;
  state_ = cma_init(enc.theta_init, config.cma);
}

RunContext RunContext::branch(const RunHistory& parent, std::size_t generation,
                              std::size_t candidate_index,
                              std::shared_ptr<EmbeddingProvider> embedder, std::string run_id) {
  CmaState state = branch_from(parent, generation, candidate_index);
  RunHistory h;
  h.run_id = std::move(run_id);
  h.prompt = parent.current_prompt();
  h.theta_init = SwarmParams::from_array(parent.records[generation].candidate_params[candidate_index]);
  h.theta_prompt = parent.theta_prompt;
  h.config = parent.config;
  h.config.run_seed = derive_seed(parent.config.run_seed, {0x6272616eULL, generation, candidate_index});
  h.config.cma.seed = state.config.seed;
  h.embedder_id = embedder->model_id();
  h.parent = state.parent;
  Embedding prompt_embedding = embed_text(*embedder, h.prompt);
  return RunContext(std::move(h), std::move(state), std::move(prompt_embedding),
                    std::move(embedder));
}

std::vector<CandidateEvaluation> RunContext::evaluate_all(
    const std::vector<Candidate>& candidates) {
  const auto& config = history_.config;
  const std::size_t g = state_.generation;
  std::vector<std::optional<CandidateEvaluation>> slots(candidates.size());

  auto evaluate_one = [&](std::size_t k) {
    slots[k] = evaluate_candidate(candidates[k], prompt_embedding_, history_.theta_prompt, config,
                                  *embedder_, candidate_seed(config.run_seed, g, k));
  };

  std::size_t workers = config.workers == 0 ? std::thread::hardware_concurrency() : config.workers;
  workers = std::clamp<std::size_t>(workers, 1, candidates.size());
  if (workers == 1) {
    for (std::size_t k = 0; k < candidates.size(); ++k) evaluate_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t k = next++; k < candidates.size(); k = next++) {
            try {
              evaluate_one(k);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<CandidateEvaluation> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

GenerationOutcome RunContext::run_generation() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t g = state_.generation;
  std::vector<Candidate> candidates = cma_ask(state_);

  std::vector<CandidateEvaluation> evals;
  try {
    evals = evaluate_all(candidates);
  } catch (const EmbedServiceError&) {
    // One retry of the whole generation; candidates and seeds are unchanged.
    evals = evaluate_all(candidates);
  }

  GenerationRecord rec;
  rec.generation = g;
  std::vector<Embedding> best_frames;
  best_frames.reserve(evals.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    candidates[k].loss = evals[k].loss;
    rec.losses.push_back(evals[k].loss);
    rec.semantic_losses.push_back(evals[k].semantic_loss);
    rec.candidate_params.push_back(candidates[k].params.to_array());
    best_frames.push_back(evals[k].best_frame_embedding);
  }
  cma_tell(state_, candidates);

  rec.best_index = static_cast<std::size_t>(
      std::min_element(rec.losses.begin(), rec.losses.end()) - rec.losses.begin());
  rec.best_params = candidates[rec.best_index].params;
  rec.best_loss = rec.losses[rec.best_index];
  rec.best_so_far_loss = history_.records.empty()
                             ? rec.best_loss
                             : std::min(history_.records.back().best_so_far_loss, rec.best_loss);
  rec.best_frame_digest = evals[rec.best_index].frame_digest;

  rec.diversity = population_diversity(best_frames);
  {
    std::vector<double> sum(Embedding::kDimension, 0.0);
    for (const auto& e : best_frames) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += e[i];
    }
    double n2 = 0.0;
    for (double v : sum) n2 += v * v;
    if (n2 > 0.0) {
      Embedding mean = Embedding::from_raw(sum);
      if (previous_mean_embedding_) {
        rec.cross_generation_diversity = 1.0 - cosine_similarity(mean, *previous_mean_embedding_);
      }
      previous_mean_embedding_ = std::move(mean);
    }
  }
  rec.noise_injected = apply_diversity_noise(state_, rec.diversity);
  rec.sigma = state_.sigma;
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();

  history_.records.push_back(rec);
  ImageRGB frame = std::move(evals[rec.best_index].best_frame);
  return {std::move(rec), std::move(frame)};
}

void RunContext::refine_prompt(std::string_view new_prompt, const MappingModel& mapping) {
  if (new_prompt.empty()) throw EmptyPrompt("prompt is empty");
  const PromptEncoding enc = encode_prompt(mapping, new_prompt, *embedder_);
  prompt_embedding_ = embed_text(*embedder_, new_prompt);
  history_.theta_prompt = enc.theta_prompt;
  history_.prompt_revisions.push_back({state_.generation, std::string(new_prompt)});
}

CmaState branch_from(const RunHistory& history, std::size_t generation,
                     std::size_t candidate_index) {
  if (generation >= history.records.size()) {
    throw IndexError("generation " + std::to_string(generation) + " is not in the history");
  }
  const auto& rec = history.records[generation];
  if (candidate_index >= rec.candidate_params.size()) {
    throw IndexError("candidate " + std::to_string(candidate_index) + " is not in generation " +
                     std::to_string(generation));
  }
  CmaConfig cfg = history.config.cma;
  cfg.seed = derive_seed(history.config.run_seed, {0x6272616eULL, generation, candidate_index});
  CmaState s = cma_init(SwarmParams::from_array(rec.candidate_params[candidate_index]), cfg);
  s.sigma = 0.5 * cfg.sigma0;
  s.parent = BranchOrigin{history.run_id, generation, candidate_index};
  return s;
}

RunHistory evolve(std::string_view prompt, const EvolutionConfig& config,
                  const MappingModel& mapping, EmbeddingProvider& embedder,
                  const ProgressCallback& on_generation) {
  std::shared_ptr<EmbeddingProvider> borrowed(std::shared_ptr<void>{}, &embedder);
  RunContext ctx(prompt, config, mapping, borrowed);
  while (!ctx.finished()) {
    GenerationOutcome outcome;
    try {
      outcome = ctx.run_generation();
    } catch (const Error& e) {
      throw EvolutionAborted(ctx.history(), std::current_exception(), e.what());
    }
    if (on_generation) on_generation(outcome);
  }
  return ctx.history();
}

}  // namespace semswarm

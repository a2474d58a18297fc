#include "semswarm/run_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "semswarm/errors.hpp"

namespace semswarm {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used, 16);
  if (used != s.size()) throw std::invalid_argument("bad hex digest");
  return v;
}

template <typename T>
void override_field(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field \"") + key + "\" has the wrong type");
  }
}

std::array<double, SwarmParams::kDimension> params_array(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != SwarmParams::kDimension) throw std::invalid_argument("expected 6 parameters");
  std::array<double, SwarmParams::kDimension> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

json config_to_json(const EvolutionConfig& c) {
  return {
      {"n_agents", c.n_agents},
      {"sim_steps", c.sim_steps},
      {"frames_per_eval", c.frames_per_eval},
      {"generations", c.generations},
      {"image_size", c.image_size},
      {"trail_decay", c.trail_decay},
      {"trail_frames", c.trail_frames},
      {"run_seed", c.run_seed},
      {"workers", c.workers},
      {"embedder",
       {{"kind", c.embedder.kind == EmbedderKind::kOracle ? "oracle" : "remote"},
        {"endpoint", c.embedder.endpoint}}},
      {"cma",
       {{"population_size", c.cma.population_size},
        {"sigma0", c.cma.sigma0},
        {"dimension", c.cma.dimension},
        {"max_generations", c.cma.max_generations},
        {"seed", c.cma.seed},
        {"prior_lambda", c.cma.prior_lambda},
        {"diversity_threshold", c.cma.diversity_threshold},
        {"noise_boost", c.cma.noise_boost},
        {"sigma_max", c.cma.sigma_max}}},
  };
}

EvolutionConfig config_from_json(const json& j, EvolutionConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  override_field(j, "n_agents", c.n_agents);
  override_field(j, "sim_steps", c.sim_steps);
  override_field(j, "frames_per_eval", c.frames_per_eval);
  override_field(j, "generations", c.generations);
  override_field(j, "image_size", c.image_size);
  override_field(j, "trail_decay", c.trail_decay);
  override_field(j, "trail_frames", c.trail_frames);
  override_field(j, "run_seed", c.run_seed);
  override_field(j, "workers", c.workers);
  if (j.contains("embedder")) {
    const auto& e = j["embedder"];
    if (!e.is_object()) throw ConfigError("config field \"embedder\" must be an object");
    std::string kind = c.embedder.kind == EmbedderKind::kOracle ? "oracle" : "remote";
    override_field(e, "kind", kind);
    if (kind == "oracle") {
      c.embedder.kind = EmbedderKind::kOracle;
    } else if (kind == "remote") {
      c.embedder.kind = EmbedderKind::kRemote;
    } else {
      throw ConfigError("embedder kind must be \"oracle\" or \"remote\"");
    }
    override_field(e, "endpoint", c.embedder.endpoint);
  }
  if (j.contains("cma")) {
    const auto& m = j["cma"];
    if (!m.is_object()) throw ConfigError("config field \"cma\" must be an object");
    override_field(m, "population_size", c.cma.population_size);
    override_field(m, "sigma0", c.cma.sigma0);
    override_field(m, "dimension", c.cma.dimension);
    override_field(m, "max_generations", c.cma.max_generations);
    override_field(m, "seed", c.cma.seed);
    override_field(m, "prior_lambda", c.cma.prior_lambda);
    override_field(m, "diversity_threshold", c.cma.diversity_threshold);
    override_field(m, "noise_boost", c.cma.noise_boost);
    override_field(m, "sigma_max", c.cma.sigma_max);
  }
  return c;
}

json record_to_json(const GenerationRecord& r, bool include_wall_ms) {
  json j = {
      {"type", "generation"},
      {"generation", r.generation},
      {"losses", r.losses},
      {"semantic_losses", r.semantic_losses},
      {"candidate_params", r.candidate_params},
      {"best_index", r.best_index},
      {"best_params", r.best_params.to_array()},
      {"best_loss", r.best_loss},
      {"best_so_far_loss", r.best_so_far_loss},
      {"diversity", r.diversity},
      {"cross_generation_diversity", r.cross_generation_diversity},
      {"noise_injected", r.noise_injected},
      {"sigma", r.sigma},
      {"best_frame_digest", hex64(r.best_frame_digest)},
  };
  if (include_wall_ms) j["wall_ms"] = r.wall_ms;
  return j;
}

GenerationRecord record_from_json(const json& j) {
  GenerationRecord r;
  r.generation = j.at("generation").get<std::size_t>();
  r.losses = j.at("losses").get<std::vector<double>>();
  r.semantic_losses = j.at("semantic_losses").get<std::vector<double>>();
  for (const auto& p : j.at("candidate_params")) r.candidate_params.push_back(params_array(p));
  r.best_index = j.at("best_index").get<std::size_t>();
  r.best_params = SwarmParams::from_array(params_array(j.at("best_params")));
  r.best_loss = j.at("best_loss").get<double>();
  r.best_so_far_loss = j.at("best_so_far_loss").get<double>();
  r.diversity = j.at("diversity").get<double>();
  r.cross_generation_diversity = j.at("cross_generation_diversity").get<double>();
  r.noise_injected = j.at("noise_injected").get<bool>();
  r.sigma = j.at("sigma").get<double>();
  r.best_frame_digest = parse_hex64(j.at("best_frame_digest").get<std::string>());
  r.wall_ms = j.value("wall_ms", std::int64_t{0});
  if (r.losses.size() != r.candidate_params.size() ||
      r.semantic_losses.size() != r.losses.size() || r.best_index >= r.losses.size()) {
    throw std::invalid_argument("inconsistent candidate arrays");
  }
  return r;
}

json header_to_json(const RunHistory& h) {
  json revisions = json::array();
  for (const auto& r : h.prompt_revisions) {
    revisions.push_back({{"generation", r.generation}, {"prompt", r.prompt}});
  }
  json parent = nullptr;
  if (h.parent) {
    parent = {{"run_id", h.parent->parent_run_id},
              {"generation", h.parent->generation},
              {"candidate", h.parent->candidate_index}};
  }
  return {
      {"type", "header"},
      {"v", kRunLogVersion},
      {"run_id", h.run_id},
      {"prompt", h.prompt},
      {"prompt_revisions", revisions},
      {"theta_init", h.theta_init.to_array()},
      {"theta_prompt", h.theta_prompt},
      {"config", config_to_json(h.config)},
      {"rng_algorithm_id", h.rng_algorithm_id},
      {"embedder_id", h.embedder_id},
      {"parent", parent},
  };
}

std::string serialize_run(const RunHistory& h, bool include_wall_ms) {
  std::string out = header_to_json(h).dump();
  out.push_back('\n');
  for (const auto& r : h.records) {
    out += record_to_json(r, include_wall_ms).dump();
    out.push_back('\n');
  }
  return out;
}

namespace {

void read_header(const json& j, RunHistory& h) {
  if (j.at("type").get<std::string>() != "header") {
    throw std::invalid_argument("first line must be the header");
  }
  h.run_id = j.at("run_id").get<std::string>();
  h.prompt = j.at("prompt").get<std::string>();
  for (const auto& r : j.at("prompt_revisions")) {
    h.prompt_revisions.push_back(
        {r.at("generation").get<std::size_t>(), r.at("prompt").get<std::string>()});
  }
  h.theta_init = SwarmParams::from_array(params_array(j.at("theta_init")));
  h.theta_prompt = params_array(j.at("theta_prompt"));
  h.config = config_from_json(j.at("config"));
  h.rng_algorithm_id = j.at("rng_algorithm_id").get<std::string>();
  h.embedder_id = j.value("embedder_id", std::string{});
  const auto& p = j.at("parent");
  if (!p.is_null()) {
    h.parent = BranchOrigin{p.at("run_id").get<std::string>(), p.at("generation").get<std::size_t>(),
                            p.at("candidate").get<std::size_t>()};
  }
}

}  // namespace

RunHistory parse_run(std::string_view text) {
  RunHistory h;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        read_header(j, h);
        have_header = true;
      } else {
        if (j.at("type").get<std::string>() != "generation") {
          throw std::invalid_argument("expected a generation record");
        }
        GenerationRecord r = record_from_json(j);
        if (r.generation != h.records.size() &&
            !(h.records.empty() || r.generation == h.records.back().generation + 1)) {
          throw std::invalid_argument("records out of order");
        }
        h.records.push_back(std::move(r));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "run log has no header");
  return h;
}

void write_run_log(const RunHistory& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << serialize_run(history);
    if (!out) throw Error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

RunHistory read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open run log " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run(ss.str());
}

bool valid_run_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

std::string persist_run(const RunHistory& history, const std::filesystem::path& store) {
  if (!valid_run_id(history.run_id)) {
    throw InvalidParameter("run id \"" + history.run_id + "\" is not a valid store key");
  }
  write_run_log(history, store / (history.run_id + ".jsonl"));
  return history.run_id;
}

RunHistory load_run(const std::filesystem::path& store, std::string_view run_id) {
  if (!valid_run_id(run_id)) throw NotFound("no run \"" + std::string(run_id) + "\"");
  const auto path = store / (std::string(run_id) + ".jsonl");
  if (!std::filesystem::exists(path)) throw NotFound("no run \"" + std::string(run_id) + "\"");
  return read_run_log(path);
}

}  // namespace semswarm

#include "cate/config.hpp"

#include <cstdio>
#include <fstream>

#include "cate/error.hpp"

namespace cate {

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json learner_to_json(const LearnerSpec& spec) {
  Json j;
  j["kind"] = kind_name(spec.kind());
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>) {
          j["max_depth"] = p.max_depth;
          j["min_node_size"] = p.min_node_size;
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          j["n_trees"] = p.n_trees;
          j["min_node_size"] = p.min_node_size;
          j["feature_fraction"] = p.feature_fraction;
        } else if constexpr (std::is_same_v<P, BoostingParams>) {
          j["n_rounds"] = p.n_rounds;
          j["learning_rate"] = p.learning_rate;
          j["max_depth"] = p.max_depth;
          j["min_node_size"] = p.min_node_size;
        } else {
          j["lambda"] = p.lambda;
        }
      },
      spec.params);
  j["seed"] = spec.seed;
  return j;
}

LearnerSpec learner_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    LearnerSpec spec;
    if (kind == kind_name(LearnerKind::RegressionTree)) {
      TreeParams p;
      read_opt(j, "max_depth", p.max_depth);
      read_opt(j, "min_node_size", p.min_node_size);
      spec.params = p;
    } else if (kind == kind_name(LearnerKind::RandomForest)) {
      ForestParams p;
      read_opt(j, "n_trees", p.n_trees);
      read_opt(j, "min_node_size", p.min_node_size);
      read_opt(j, "feature_fraction", p.feature_fraction);
      spec.params = p;
    } else if (kind == kind_name(LearnerKind::GradientBoosting)) {
      BoostingParams p;
      read_opt(j, "n_rounds", p.n_rounds);
      read_opt(j, "learning_rate", p.learning_rate);
      read_opt(j, "max_depth", p.max_depth);
      read_opt(j, "min_node_size", p.min_node_size);
      spec.params = p;
    } else if (kind == kind_name(LearnerKind::Ridge)) {
      RidgeParams p;
      read_opt(j, "lambda", p.lambda);
      spec.params = p;
    } else {
      throw ArgumentError("unknown learner kind '" + kind + "'");
    }
    read_opt(j, "seed", spec.seed);
    spec.validate();
    return spec;
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("bad learner configuration: ") + e.what());
  }
}

Json stack_to_json(const StackSpec& spec) {
  Json members = Json::array();
  for (const auto& m : spec.members) members.push_back(learner_to_json(m));
  return Json{{"members", members}, {"cv_folds", spec.cv_folds}, {"seed", spec.seed}};
}

StackSpec stack_from_json(const Json& j) {
  try {
    StackSpec spec;
    if (j.is_array()) {
      for (const auto& m : j) spec.members.push_back(learner_from_json(m));
    } else {
      for (const auto& m : j.at("members")) spec.members.push_back(learner_from_json(m));
      read_opt(j, "cv_folds", spec.cv_folds);
      read_opt(j, "seed", spec.seed);
    }
    spec.validate();
    return spec;
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("bad stack configuration: ") + e.what());
  }
}

Json forest_to_json(const CausalForestParams& p) {
  return Json{{"n_trees", p.n_trees},
              {"min_node_size", p.min_node_size},
              {"subsample_fraction", p.subsample_fraction},
              {"mtry_fraction", p.mtry_fraction},
              {"max_depth", p.max_depth},
              {"honesty", p.honesty},
              {"seed", p.seed}};
}

CausalForestParams forest_from_json(const Json& j, CausalForestParams p) {
  try {
    read_opt(j, "n_trees", p.n_trees);
    read_opt(j, "min_node_size", p.min_node_size);
    read_opt(j, "subsample_fraction", p.subsample_fraction);
    read_opt(j, "mtry_fraction", p.mtry_fraction);
    read_opt(j, "max_depth", p.max_depth);
    read_opt(j, "honesty", p.honesty);
    read_opt(j, "seed", p.seed);
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("bad causal forest configuration: ") + e.what());
  }
  p.validate();
  return p;
}

Json meta_config_to_json(const MetaConfig& c) {
  return Json{{"folds", c.folds},
              {"clip_epsilon", c.clip_epsilon},
              {"second_stage", c.second_stage == SecondStage::CrossFit ? "crossfit" : "insample"},
              {"seed", c.seed},
              {"propensity", stack_to_json(c.e_spec)},
              {"outcome", stack_to_json(c.mu_spec)},
              {"effect", stack_to_json(c.t_spec)},
              {"causal_forest", forest_to_json(c.forest)}};
}

MetaConfig meta_config_from_json(const Json& j, MetaConfig c) {
  try {
    read_opt(j, "folds", c.folds);
    read_opt(j, "clip_epsilon", c.clip_epsilon);
    read_opt(j, "seed", c.seed);
    if (j.contains("second_stage")) {
      auto s = j.at("second_stage").get<std::string>();
      if (s == "crossfit") {
        c.second_stage = SecondStage::CrossFit;
      } else if (s == "insample") {
        c.second_stage = SecondStage::InSample;
      } else {
        throw ArgumentError("second_stage must be 'crossfit' or 'insample'");
      }
    }
    if (j.contains("propensity")) c.e_spec = stack_from_json(j.at("propensity"));
    if (j.contains("outcome")) c.mu_spec = stack_from_json(j.at("outcome"));
    if (j.contains("effect")) c.t_spec = stack_from_json(j.at("effect"));
    if (j.contains("causal_forest")) c.forest = forest_from_json(j.at("causal_forest"), c.forest);
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("bad configuration: ") + e.what());
  }
  return c;
}

MetaConfig default_meta_config() {
  StackSpec stack;
  stack.members = {LearnerSpec::forest(ForestParams{200, 10, 1.0 / 3.0}, 11),
                   LearnerSpec::boosting(BoostingParams{100, 0.1, 3, 5}, 12),
                   LearnerSpec::ridge(RidgeParams{1.0}, 13)};
  MetaConfig c;
  c.e_spec = stack;
  c.mu_spec = stack;
  c.t_spec = stack;
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read config " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ArgumentError(path + ": invalid JSON (" + e.what() + ")");
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cate

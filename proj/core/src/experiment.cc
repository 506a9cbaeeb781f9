#include "srn/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "srn/errors.h"

namespace srn {

namespace {

using nlohmann::json;

std::string FormatNumber(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

json ToJson(const ExperimentConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["num_users"] = c.num_users;
  j["num_devices"] = c.num_devices;
  j["rho"] = c.rho;
  j["frames"] = c.frames;
  json policies = json::array();
  for (PolicyKind kind : c.policies) policies.push_back(PolicyName(kind));
  j["policies"] = policies;
  json changes = json::array();
  for (const auto& change : c.n_changes) {
    changes.push_back(
        {{"frame", change.frame}, {"num_devices", change.num_devices}});
  }
  j["n_changes"] = changes;
  j["max_devices"] = c.max_devices;
  j["tx_power_dbm"] = c.tx_power_dbm;
  j["noise_dbm"] = c.noise_dbm;
  j["reflection"] = c.reflection;
  j["spreading"] = c.spreading;
  j["region_side"] = c.region_side;
  j["min_dist"] = c.min_dist;
  j["max_dist"] = c.max_dist;
  j["carrier_freq_mhz"] = c.carrier_freq_mhz;
  j["tx_gain_db"] = c.tx_gain_db;
  j["rx_gain_db"] = c.rx_gain_db;
  j["gamma"] = c.gamma;
  j["batch_size"] = c.batch_size;
  j["target_period"] = c.target_period;
  j["replay_capacity"] = c.replay_capacity;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["epsilon_initial"] = c.epsilon_initial;
  j["epsilon_min"] = c.epsilon_min;
  j["epsilon_decay"] = c.epsilon_decay;
  j["centralized_hidden"] = c.centralized_hidden;
  j["distributed_hidden"] = c.distributed_hidden;
  j["clip_norm"] = c.clip_norm;
  j["max_joint_actions"] = c.max_joint_actions;
  j["enumeration_cap"] = c.enumeration_cap;
  j["moving_average_window"] = c.moving_average_window;
  j["tail_fraction"] = c.tail_fraction;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig FromJson(const json& input) {
  if (!input.is_object()) throw ContractError("config must be a JSON object");
  json j = ToJson(ExperimentConfig{});
  for (const auto& [key, value] : input.items()) {
    if (!j.contains(key)) throw ContractError("unknown config field: " + key);
    j[key] = value;
  }
  ExperimentConfig c;
  try {
    j.at("scenario").get_to(c.scenario);
    j.at("num_users").get_to(c.num_users);
    j.at("num_devices").get_to(c.num_devices);
    j.at("rho").get_to(c.rho);
    j.at("frames").get_to(c.frames);
    c.policies.clear();
    for (const auto& name : j.at("policies")) {
      c.policies.push_back(ParsePolicy(name.get<std::string>()));
    }
    c.n_changes.clear();
    for (const auto& change : j.at("n_changes")) {
      c.n_changes.push_back({change.at("frame").get<std::uint64_t>(),
                             change.at("num_devices").get<int>()});
    }
    j.at("max_devices").get_to(c.max_devices);
    j.at("tx_power_dbm").get_to(c.tx_power_dbm);
    j.at("noise_dbm").get_to(c.noise_dbm);
    j.at("reflection").get_to(c.reflection);
    j.at("spreading").get_to(c.spreading);
    j.at("region_side").get_to(c.region_side);
    j.at("min_dist").get_to(c.min_dist);
    j.at("max_dist").get_to(c.max_dist);
    j.at("carrier_freq_mhz").get_to(c.carrier_freq_mhz);
    j.at("tx_gain_db").get_to(c.tx_gain_db);
    j.at("rx_gain_db").get_to(c.rx_gain_db);
    j.at("gamma").get_to(c.gamma);
    j.at("batch_size").get_to(c.batch_size);
    j.at("target_period").get_to(c.target_period);
    j.at("replay_capacity").get_to(c.replay_capacity);
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("adam_beta1").get_to(c.adam_beta1);
    j.at("adam_beta2").get_to(c.adam_beta2);
    j.at("adam_epsilon").get_to(c.adam_epsilon);
    j.at("epsilon_initial").get_to(c.epsilon_initial);
    j.at("epsilon_min").get_to(c.epsilon_min);
    j.at("epsilon_decay").get_to(c.epsilon_decay);
    j.at("centralized_hidden").get_to(c.centralized_hidden);
    j.at("distributed_hidden").get_to(c.distributed_hidden);
    j.at("clip_norm").get_to(c.clip_norm);
    j.at("max_joint_actions").get_to(c.max_joint_actions);
    j.at("enumeration_cap").get_to(c.enumeration_cap);
    j.at("moving_average_window").get_to(c.moving_average_window);
    j.at("tail_fraction").get_to(c.tail_fraction);
    j.at("seed").get_to(c.seed);
    j.at("output_dir").get_to(c.output_dir);
  } catch (const json::exception& e) {
    throw ContractError(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::uint64_t AgentStreamFor(PolicyKind kind) {
  return static_cast<std::uint64_t>(Stream::kAgentBase) +
         static_cast<std::uint64_t>(kind);
}

class CentralizedRunner : public PolicyRunner {
 public:
  CentralizedRunner(const ExperimentConfig& config, const SrnEnvironment& env)
      : agent_(env.num_users(), env.num_devices(), config.Agent(),
               env.gain_scale(),
               MakeStream(config.seed, AgentStreamFor(PolicyKind::kCentralized))) {}
  PolicyKind kind() const override { return PolicyKind::kCentralized; }
  bool learns() const override { return true; }
  FrameLog Step(const LinkGains& gains, const SystemParams& params) override {
    return agent_.Step(gains, params);
  }
  void ResizeDevices(int num_devices) override {
    agent_.ResizeDevices(num_devices);
  }

 private:
  CentralizedAgent agent_;
};

class DistributedRunner : public PolicyRunner {
 public:
  DistributedRunner(const ExperimentConfig& config, const SrnEnvironment& env)
      : agent_(env.num_users(), env.num_devices(),
               config.EffectiveMaxDevices(), config.Agent(), env.gain_scale(),
               MakeStream(config.seed, AgentStreamFor(PolicyKind::kDistributed))) {}
  PolicyKind kind() const override { return PolicyKind::kDistributed; }
  bool learns() const override { return true; }
  FrameLog Step(const LinkGains& gains, const SystemParams& params) override {
    return agent_.Step(gains, params);
  }
  void ResizeDevices(int num_devices) override {
    agent_.ResizeDevices(num_devices);
  }

 private:
  DistributedAgent agent_;
};

class OptimalRunner : public PolicyRunner {
 public:
  explicit OptimalRunner(std::uint64_t cap) : cap_(cap) {}
  PolicyKind kind() const override { return PolicyKind::kOptimal; }
  bool learns() const override { return false; }
  FrameLog Step(const LinkGains& gains, const SystemParams& params) override {
    PolicyDecision best = OptimalPolicy(gains, params, cap_);
    FrameLog log;
    log.frame = ++frame_;
    log.num_devices = static_cast<int>(gains.cols());
    log.assoc = std::move(best.assoc);
    log.sum_rate = best.achieved_sum_rate;
    return log;
  }
  void ResizeDevices(int) override {}

 private:
  std::uint64_t cap_;
  std::uint64_t frame_ = 0;
};

class RandomRunner : public PolicyRunner {
 public:
  explicit RandomRunner(std::uint64_t seed)
      : rng_(MakeStream(seed, AgentStreamFor(PolicyKind::kRandom))) {}
  PolicyKind kind() const override { return PolicyKind::kRandom; }
  bool learns() const override { return false; }
  FrameLog Step(const LinkGains& gains, const SystemParams& params) override {
    FrameLog log;
    log.frame = ++frame_;
    log.num_devices = static_cast<int>(gains.cols());
    log.assoc = RandomPolicy(static_cast<int>(gains.rows()),
                             static_cast<int>(gains.cols()), rng_);
    log.sum_rate = EvaluateFrame(gains, log.assoc, params).sum_rate;
    return log;
  }
  void ResizeDevices(int) override {}

 private:
  Rng rng_;
  std::uint64_t frame_ = 0;
};

bool AllFinite(const FrameRecord& r) {
  return std::isfinite(r.sum_rate) && std::isfinite(r.moving_avg) &&
         (!r.loss || std::isfinite(*r.loss)) &&
         (!r.epsilon || std::isfinite(*r.epsilon));
}

}  // namespace

std::string_view PolicyName(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kCentralized:
      return "centralized";
    case PolicyKind::kDistributed:
      return "distributed";
    case PolicyKind::kOptimal:
      return "optimal";
    case PolicyKind::kRandom:
      return "random";
  }
  return "unknown";
}

PolicyKind ParsePolicy(std::string_view name) {
  for (PolicyKind kind : kAllPolicies) {
    if (PolicyName(kind) == name) return kind;
  }
  throw ContractError("unknown policy: " + std::string(name));
}

void ExperimentConfig::Validate() const {
  if (num_users < 1 || num_devices < 1) {
    throw ContractError("num_users and num_devices must be positive");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw ContractError("rho must lie in [0,1]");
  if (policies.empty()) throw ContractError("at least one policy is required");
  std::set<PolicyKind> seen(policies.begin(), policies.end());
  if (seen.size() != policies.size()) {
    throw ContractError("policies must not repeat");
  }
  std::uint64_t previous = 0;
  for (const auto& change : n_changes) {
    if (change.frame < 1 || change.frame <= previous) {
      throw ContractError("n_changes frames must be >= 1 and increasing");
    }
    if (change.num_devices < 1) {
      throw ContractError("n_changes device counts must be positive");
    }
    previous = change.frame;
  }
  if (max_devices != 0 && max_devices < EffectiveMaxDevices()) {
    throw ContractError("max_devices is below a scheduled device count");
  }
  if (moving_average_window < 1) {
    throw ContractError("moving_average_window must be >= 1");
  }
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw ContractError("tail_fraction must lie in (0,1]");
  }
  Topology().Validate();
  System().Validate();
  Agent().Validate();
}

bool ExperimentConfig::Has(PolicyKind kind) const {
  return std::find(policies.begin(), policies.end(), kind) != policies.end();
}

int ExperimentConfig::EffectiveMaxDevices() const {
  int largest = num_devices;
  for (const auto& change : n_changes) {
    largest = std::max(largest, change.num_devices);
  }
  return max_devices > 0 ? std::max(max_devices, largest) : largest;
}

TopologyConfig ExperimentConfig::Topology() const {
  TopologyConfig t;
  t.num_users = num_users;
  t.num_devices = num_devices;
  t.region_side = region_side;
  t.min_dist = min_dist;
  t.max_dist = max_dist;
  t.carrier_freq_mhz = carrier_freq_mhz;
  t.tx_gain_db = tx_gain_db;
  t.rx_gain_db = rx_gain_db;
  t.seed = seed;
  return t;
}

SystemParams ExperimentConfig::System() const {
  SystemParams p;
  p.tx_power_w = DbmToWatts(tx_power_dbm);
  p.noise_w = DbmToWatts(noise_dbm);
  p.reflection = {reflection, 0.0};
  p.spreading = spreading;
  return p;
}

AgentConfig ExperimentConfig::Agent() const {
  AgentConfig a;
  a.gamma = gamma;
  a.batch_size = batch_size;
  a.target_period = target_period;
  a.replay_capacity = replay_capacity;
  a.adam = {learning_rate, adam_beta1, adam_beta2, adam_epsilon};
  a.epsilon = {epsilon_initial, epsilon_min, epsilon_decay};
  a.centralized_hidden = centralized_hidden;
  a.distributed_hidden = distributed_hidden;
  a.clip_norm = clip_norm;
  a.max_joint_actions = max_joint_actions;
  return a;
}

std::string ExperimentConfig::Serialize() const {
  return ToJson(*this).dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::Parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("config is not valid JSON: ") + e.what());
  }
  return FromJson(j);
}

ExperimentConfig ExperimentConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

void ExperimentConfig::Override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ContractError("override must look like key=value: " +
                        std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json j = ToJson(*this);
  if (!j.contains(key)) throw ContractError("unknown config field: " + key);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  j[key] = value;
  *this = FromJson(j);
}

bool RunTrace::Has(PolicyKind kind) const {
  return std::find(policies.begin(), policies.end(), kind) != policies.end();
}

std::vector<const FrameRecord*> RunTrace::Of(PolicyKind kind) const {
  std::vector<const FrameRecord*> out;
  for (const auto& r : records) {
    if (r.policy == kind) out.push_back(&r);
  }
  return out;
}

std::uint64_t GainDigest(const LinkGains& gains) {
  // FNV-1a over dimensions and the raw IEEE-754 bytes.
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ull;
    }
  };
  const std::int64_t rows = gains.rows();
  const std::int64_t cols = gains.cols();
  mix(&rows, sizeof(rows));
  mix(&cols, sizeof(cols));
  mix(gains.data(), sizeof(double) * static_cast<std::size_t>(gains.size()));
  return hash;
}

std::vector<double> MovingAverage(std::span<const double> series, int window) {
  if (window < 1) throw ContractError("moving average window must be >= 1");
  std::vector<double> out(series.size());
  const std::size_t w = static_cast<std::size_t>(window);
  for (std::size_t t = 0; t < series.size(); ++t) {
    const std::size_t first = t + 1 >= w ? t + 1 - w : 0;
    double sum = 0.0;
    for (std::size_t i = first; i <= t; ++i) sum += series[i];
    out[t] = sum / static_cast<double>(t - first + 1);
  }
  return out;
}

std::unique_ptr<PolicyRunner> MakeRunner(PolicyKind kind,
                                         const ExperimentConfig& config,
                                         const SrnEnvironment& env) {
  switch (kind) {
    case PolicyKind::kCentralized:
      return std::make_unique<CentralizedRunner>(config, env);
    case PolicyKind::kDistributed:
      return std::make_unique<DistributedRunner>(config, env);
    case PolicyKind::kOptimal:
      return std::make_unique<OptimalRunner>(config.enumeration_cap);
    case PolicyKind::kRandom:
      return std::make_unique<RandomRunner>(config.seed);
  }
  throw ContractError("unknown policy kind");
}

void ApplyDeviceCountChange(
    SrnEnvironment& env, std::span<const std::unique_ptr<PolicyRunner>> runners,
    int num_devices) {
  if (num_devices == env.num_devices()) return;
  for (const auto& runner : runners) {
    if (runner->kind() == PolicyKind::kCentralized) {
      // Raises the agent's own unsupported-operation error.
      runner->ResizeDevices(num_devices);
    }
  }
  env.ResizeDevices(num_devices);
  for (const auto& runner : runners) runner->ResizeDevices(num_devices);
}

RunTrace RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  if (!config.n_changes.empty() && config.Has(PolicyKind::kCentralized)) {
    throw UnsupportedOperation(
        "centralized agent is not scalable: device-count changes require the "
        "distributed agent");
  }
  RunTrace trace;
  trace.window = config.moving_average_window;

  SrnEnvironment env(config.Topology(), config.System(), config.rho);

  std::vector<std::unique_ptr<PolicyRunner>> runners;
  for (PolicyKind kind : kAllPolicies) {
    if (!config.Has(kind)) continue;
    if (kind == PolicyKind::kOptimal) {
      try {
        AssociationCount(config.num_users, config.EffectiveMaxDevices(),
                         config.enumeration_cap);
      } catch (const IntractableError& e) {
        trace.warnings.push_back(std::string("optimal unavailable: ") +
                                 e.what());
        continue;
      }
    }
    runners.push_back(MakeRunner(kind, config, env));
    trace.policies.push_back(kind);
  }

  auto next_change = config.n_changes.begin();
  trace.records.reserve(config.frames * runners.size());
  for (std::uint64_t frame = 1; frame <= config.frames; ++frame) {
    while (next_change != config.n_changes.end() &&
           next_change->frame == frame) {
      ApplyDeviceCountChange(env, runners, next_change->num_devices);
      ++next_change;
    }
    const LinkGains& gains = env.Advance();
    const std::uint64_t digest = GainDigest(gains);
    for (const auto& runner : runners) {
      FrameLog log = runner->Step(gains, env.params());
      FrameRecord record;
      record.frame = frame;
      record.policy = runner->kind();
      record.n_devices = log.num_devices;
      record.sum_rate = log.sum_rate;
      if (runner->learns()) {
        record.epsilon = log.epsilon;
        record.loss = log.loss;
      }
      record.gain_digest = digest;
      trace.records.push_back(record);
    }
  }

  const std::size_t columns = runners.size();
  for (std::size_t p = 0; p < columns; ++p) {
    std::vector<double> series;
    series.reserve(config.frames);
    for (std::size_t i = p; i < trace.records.size(); i += columns) {
      series.push_back(trace.records[i].sum_rate);
    }
    const auto avg = MovingAverage(series, trace.window);
    for (std::size_t t = 0; t < avg.size(); ++t) {
      trace.records[t * columns + p].moving_avg = avg[t];
    }
  }
  for (const auto& r : trace.records) {
    if (!AllFinite(r)) {
      throw NumericalFault("non-finite metric for policy " +
                           std::string(PolicyName(r.policy)) + " at frame " +
                           std::to_string(r.frame));
    }
  }
  return trace;
}

const PolicySummary* RunSummary::Find(PolicyKind kind) const {
  for (const auto& p : policies) {
    if (p.policy == kind) return &p;
  }
  return nullptr;
}

double MeanMovingAverage(const RunTrace& trace, PolicyKind kind,
                         std::uint64_t first, std::uint64_t last) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : trace.records) {
    if (r.policy == kind && r.frame >= first && r.frame <= last) {
      sum += r.moving_avg;
      ++count;
    }
  }
  if (count == 0) throw ContractError("no frames in the requested range");
  return sum / static_cast<double>(count);
}

RunSummary Summarize(const RunTrace& trace, double tail_fraction) {
  if (trace.records.empty() || trace.policies.empty()) {
    throw ContractError("cannot summarize an empty trace");
  }
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw ContractError("tail_fraction must lie in (0,1]");
  }
  const std::uint64_t frames = trace.records.back().frame;
  const auto tail = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(
             std::ceil(tail_fraction * static_cast<double>(frames))));
  const std::uint64_t first = frames - tail + 1;
  RunSummary summary;
  for (PolicyKind kind : trace.policies) {
    summary.policies.push_back(
        {kind, MeanMovingAverage(trace, kind, first, frames), {}, {}});
  }
  const PolicySummary* optimal = summary.Find(PolicyKind::kOptimal);
  const PolicySummary* random = summary.Find(PolicyKind::kRandom);
  const double optimal_mean = optimal ? optimal->tail_mean : 0.0;
  const double random_mean = random ? random->tail_mean : 0.0;
  for (auto& p : summary.policies) {
    if (optimal) p.ratio_vs_optimal = p.tail_mean / optimal_mean;
    if (random) p.ratio_vs_random = p.tail_mean / random_mean;
  }
  return summary;
}

void WriteTraceCsv(const RunTrace& trace, std::ostream& out) {
  out << "frame,policy,n_devices,sum_rate,moving_avg_" << trace.window
      << ",epsilon,loss\n";
  for (const auto& r : trace.records) {
    out << r.frame << ',' << PolicyName(r.policy) << ',' << r.n_devices << ','
        << FormatNumber(r.sum_rate) << ',' << FormatNumber(r.moving_avg) << ',';
    if (r.epsilon) out << FormatNumber(*r.epsilon);
    out << ',';
    if (r.loss) out << FormatNumber(*r.loss);
    out << '\n';
  }
}

void WriteSummary(const RunSummary& summary, std::ostream& out) {
  for (const auto& p : summary.policies) {
    const std::string_view name = PolicyName(p.policy);
    out << name << ".tail_mean=" << FormatNumber(p.tail_mean) << '\n';
    if (p.ratio_vs_optimal) {
      out << name << ".ratio_vs_optimal=" << FormatNumber(*p.ratio_vs_optimal)
          << '\n';
    }
    if (p.ratio_vs_random) {
      out << name << ".ratio_vs_random=" << FormatNumber(*p.ratio_vs_random)
          << '\n';
    }
  }
}

RunOutputs RunAndWrite(const ExperimentConfig& config) {
  RunTrace trace = RunExperiment(config);
  RunOutputs outputs;
  outputs.warnings = trace.warnings;
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  const std::string stem =
      config.scenario + "_seed" + std::to_string(config.seed);
  outputs.csv = dir / (stem + ".csv");
  outputs.summary_file = dir / (stem + ".summary.txt");
  {
    std::ofstream csv(outputs.csv, std::ios::binary);
    if (!csv) throw ContractError("cannot write " + outputs.csv.string());
    WriteTraceCsv(trace, csv);
  }
  std::ofstream summary_out(outputs.summary_file, std::ios::binary);
  if (!summary_out) {
    throw ContractError("cannot write " + outputs.summary_file.string());
  }
  if (!trace.records.empty()) {
    outputs.summary = Summarize(trace, config.tail_fraction);
    WriteSummary(outputs.summary, summary_out);
  }
  return outputs;
}

}  // namespace srn

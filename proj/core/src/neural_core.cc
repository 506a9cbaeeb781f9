#include "srn/neural_core.h"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "srn/errors.h"

namespace srn {

namespace {

void CheckSizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) {
    throw ContractError("a network needs at least input and output sizes");
  }
  for (int s : sizes) {
    if (s < 1) throw ContractError("layer sizes must be positive");
  }
}

std::string FormatDouble(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

double ParseDouble(const std::string& token) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ContractError("malformed number in network snapshot: " + token);
  }
  return value;
}

double MaxAbsParameter(const QNetwork& net) {
  double max_abs = 0.0;
  for (const auto& layer : net.layers()) {
    max_abs = std::max(max_abs, layer.weight.cwiseAbs().maxCoeff());
    max_abs = std::max(max_abs, layer.bias.cwiseAbs().maxCoeff());
  }
  return max_abs;
}

}  // namespace

QNetwork::QNetwork(std::vector<int> layer_sizes)
    : layer_sizes_(std::move(layer_sizes)) {
  CheckSizes(layer_sizes_);
  for (std::size_t i = 1; i < layer_sizes_.size(); ++i) {
    layers_.push_back(
        {Eigen::MatrixXd::Zero(layer_sizes_[i], layer_sizes_[i - 1]),
         Eigen::VectorXd::Zero(layer_sizes_[i])});
  }
}

QNetwork::QNetwork(std::vector<int> layer_sizes, Rng& rng)
    : QNetwork(std::move(layer_sizes)) {
  for (auto& layer : layers_) {
    const auto fan_out = layer.weight.rows();
    const auto fan_in = layer.weight.cols();
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> init(-limit, limit);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weight(r, c) = init(rng);
    }
  }
}

std::size_t QNetwork::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) {
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return count;
}

Eigen::VectorXd QNetwork::Forward(const Eigen::VectorXd& state) const {
  if (state.size() != input_size()) {
    throw ContractError("network input has " + std::to_string(state.size()) +
                        " entries, expected " + std::to_string(input_size()));
  }
  Eigen::VectorXd activation = state;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::VectorXd z = layers_[i].weight * activation + layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    activation = std::move(z);
  }
  return activation;
}

Eigen::MatrixXd QNetwork::ForwardBatch(const Eigen::MatrixXd& states) const {
  if (states.rows() != input_size()) {
    throw ContractError("network batch input has wrong row count");
  }
  Eigen::MatrixXd activation = states;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weight * activation;
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    activation = std::move(z);
  }
  return activation;
}

bool QNetwork::AllFinite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

bool operator==(const QNetwork& a, const QNetwork& b) {
  if (a.layer_sizes_ != b.layer_sizes_) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    if (a.layers_[i].weight != b.layers_[i].weight ||
        a.layers_[i].bias != b.layers_[i].bias) {
      return false;
    }
  }
  return true;
}

NetworkGradients NetworkGradients::ZerosLike(const QNetwork& net) {
  NetworkGradients g;
  for (const auto& layer : net.layers()) {
    g.layers.push_back(
        {Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
         Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

double NetworkGradients::Norm() const {
  double sq = 0.0;
  for (const auto& layer : layers) {
    sq += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  }
  return std::sqrt(sq);
}

void NetworkGradients::Scale(double factor) {
  for (auto& layer : layers) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
}

bool NetworkGradients::AllFinite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

AdamOptimizer::AdamOptimizer(const QNetwork& net, AdamConfig config)
    : config_(config),
      first_(NetworkGradients::ZerosLike(net)),
      second_(NetworkGradients::ZerosLike(net)) {}

void AdamOptimizer::Step(QNetwork& net, const NetworkGradients& grads) {
  if (grads.layers.size() != net.layers().size() ||
      first_.layers.size() != net.layers().size()) {
    throw ContractError("optimizer state does not match the network shape");
  }
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    auto& layer = net.layers()[i];
    update(layer.weight, grads.layers[i].weight, first_.layers[i].weight,
           second_.layers[i].weight);
    update(layer.bias, grads.layers[i].bias, first_.layers[i].bias,
           second_.layers[i].bias);
  }
}

double TdTarget(double reward, const Eigen::VectorXd& next_state,
                const QNetwork& target, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error("discount factor must lie in [0,1]");
  }
  return reward + gamma * target.Forward(next_state).maxCoeff();
}

TdLoss ComputeTdLoss(const QNetwork& net, const QNetwork& target,
                     ExperienceBatch batch, double gamma) {
  if (batch.empty()) throw ContractError("minibatch must not be empty");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error("discount factor must lie in [0,1]");
  }
  const int batch_size = static_cast<int>(batch.size());
  const int in = net.input_size();
  Eigen::MatrixXd states(in, batch_size);
  Eigen::MatrixXd next_states(in, batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const Experience& e = *batch[i];
    if (e.state.size() != in || e.next_state.size() != in) {
      throw ContractError("experience state width does not match the network");
    }
    if (e.action < 0 || e.action >= net.output_size()) {
      throw ContractError("experience action outside the output layer");
    }
    states.col(i) = e.state;
    next_states.col(i) = e.next_state;
  }

  const Eigen::VectorXd next_max =
      target.ForwardBatch(next_states).colwise().maxCoeff().transpose();

  // Forward pass keeping pre-activations for the backward pass.
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();
  std::vector<Eigen::MatrixXd> activations(depth + 1);
  std::vector<Eigen::MatrixXd> pre(depth);
  activations[0] = states;
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = layers[l].weight * activations[l];
    pre[l].colwise() += layers[l].bias;
    activations[l + 1] = (l + 1 < depth) ? pre[l].cwiseMax(0.0) : pre[l];
  }
  const Eigen::MatrixXd& q = activations[depth];

  TdLoss result;
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch_size);
  double sq_sum = 0.0;
  for (int i = 0; i < batch_size; ++i) {
    const Experience& e = *batch[i];
    const double y = e.reward + gamma * next_max(i);
    const double err = y - q(e.action, i);
    sq_sum += err * err;
    delta(e.action, i) = -2.0 * err / batch_size;
  }
  result.loss = sq_sum / batch_size;

  result.grads.layers.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    result.grads.layers[l].weight = delta * activations[l].transpose();
    result.grads.layers[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers[l].weight.transpose() * delta;
      delta = back.cwiseProduct(
          (pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return result;
}

double TrainMinibatch(QNetwork& net, const QNetwork& target,
                      AdamOptimizer& adam, ExperienceBatch batch, double gamma,
                      double clip_norm) {
  TdLoss td = ComputeTdLoss(net, target, batch, gamma);
  if (!std::isfinite(td.loss) || !td.grads.AllFinite()) {
    std::ostringstream msg;
    msg << "non-finite training step: loss=" << td.loss
        << " grad_norm=" << td.grads.Norm()
        << " max_abs_param=" << MaxAbsParameter(net)
        << " adam_step=" << adam.step_count();
    throw NumericalFault(msg.str());
  }
  if (clip_norm > 0.0) {
    const double norm = td.grads.Norm();
    if (norm > clip_norm) td.grads.Scale(clip_norm / norm);
  }
  adam.Step(net, td.grads);
  return td.loss;
}

void SyncTarget(const QNetwork& net, QNetwork& target) { target = net; }

void SaveParameters(const QNetwork& net, std::ostream& out) {
  out << "srn-qnetwork 1\n";
  out << "layers " << net.layer_sizes().size();
  for (int s : net.layer_sizes()) out << ' ' << s;
  out << '\n';
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        if (c > 0) out << ' ';
        out << FormatDouble(layer.weight(r, c));
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      if (r > 0) out << ' ';
      out << FormatDouble(layer.bias(r));
    }
    out << '\n';
  }
}

QNetwork LoadParameters(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "srn-qnetwork") {
    throw ContractError("not a network snapshot");
  }
  if (version != 1) {
    throw ContractError("unsupported network snapshot version " +
                        std::to_string(version));
  }
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "layers" || count < 2 || count > 64) {
    throw ContractError("malformed layer header in network snapshot");
  }
  std::vector<int> sizes(count);
  for (auto& s : sizes) {
    if (!(in >> s)) throw ContractError("truncated layer sizes");
  }
  QNetwork net(sizes);
  std::string token;
  auto next = [&]() {
    if (!(in >> token)) throw ContractError("truncated network snapshot");
    return ParseDouble(token);
  };
  for (auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = next();
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = next();
  }
  return net;
}

}  // namespace srn

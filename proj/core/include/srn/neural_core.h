#ifndef SRN_NEURAL_CORE_H_
#define SRN_NEURAL_CORE_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "srn/random.h"

namespace srn {

// (s, a, r, s') as stored in replay memory.
struct Experience {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

using ExperienceBatch = std::span<const Experience* const>;

// y = W x + b; weight is out x in.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Fully connected Q-network: ReLU on hidden layers, identity output.
// layer_sizes = {input, hidden..., num_actions}.
class QNetwork {
 public:
  QNetwork() = default;
  // All parameters zero.
  explicit QNetwork(std::vector<int> layer_sizes);
  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero. Layers
  // are filled in order, each weight matrix row-major.
  QNetwork(std::vector<int> layer_sizes, Rng& rng);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Throws ContractError when state.size() != input_size().
  Eigen::VectorXd Forward(const Eigen::VectorXd& state) const;
  // One sample per column.
  Eigen::MatrixXd ForwardBatch(const Eigen::MatrixXd& states) const;

  bool AllFinite() const;

  friend bool operator==(const QNetwork& a, const QNetwork& b);

 private:
  std::vector<int> layer_sizes_;
  std::vector<DenseLayer> layers_;
};

// Same shape as the network's parameters.
struct NetworkGradients {
  std::vector<DenseLayer> layers;

  static NetworkGradients ZerosLike(const QNetwork& net);
  double Norm() const;
  void Scale(double factor);
  bool AllFinite() const;
};

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const QNetwork& net, AdamConfig config);

  void Step(QNetwork& net, const NetworkGradients& grads);

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_; }
  const NetworkGradients& first_moment() const { return first_; }
  const NetworkGradients& second_moment() const { return second_; }

 private:
  AdamConfig config_;
  NetworkGradients first_;
  NetworkGradients second_;
  std::int64_t step_ = 0;
};

// r + gamma * max_a' Q(s', a'; target). Continuing task, no terminal branch.
double TdTarget(double reward, const Eigen::VectorXd& next_state,
                const QNetwork& target, double gamma);

struct TdLoss {
  double loss = 0.0;
  NetworkGradients grads;
};

// Mean over the batch of (y - Q(s, a))^2 and its gradient with respect to
// the online network. Only the taken action's output carries error; the
// targets are constants.
TdLoss ComputeTdLoss(const QNetwork& net, const QNetwork& target,
                     ExperienceBatch batch, double gamma);

// One Adam step on the minibatch; returns the pre-update loss. If
// clip_norm > 0 the gradient is rescaled to at most that global norm.
// Throws NumericalFault on a non-finite loss or gradient, leaving the
// network untouched.
double TrainMinibatch(QNetwork& net, const QNetwork& target,
                      AdamOptimizer& adam, ExperienceBatch batch, double gamma,
                      double clip_norm = 0.0);

// target <- net.
void SyncTarget(const QNetwork& net, QNetwork& target);

// Text snapshot, version 1:
//   srn-qnetwork 1
//   layers <count> <size_0> ... <size_L>
//   then per layer: weight rows (row-major, one row per line), bias line.
// Values are printed in shortest round-trip form, so Load(Save(net)) == net.
void SaveParameters(const QNetwork& net, std::ostream& out);
QNetwork LoadParameters(std::istream& in);

}  // namespace srn

#endif  // SRN_NEURAL_CORE_H_

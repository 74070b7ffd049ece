#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace ged {

class Rng;

// Standard LSTM cell. Gate blocks are stacked in the order input, forget,
// output, candidate: rows [0,H) = i, [H,2H) = f, [2H,3H) = o, [3H,4H) = g.
struct LstmParams {
  Eigen::MatrixXd W;  // 4H x I
  Eigen::MatrixXd U;  // 4H x H
  Eigen::MatrixXd b;  // 4H x 1

  LstmParams() = default;
  LstmParams(int input_dim, int hidden_dim);

  int input_dim() const { return static_cast<int>(W.cols()); }
  int hidden_dim() const { return static_cast<int>(U.cols()); }

  void init(Rng& rng);
  void set_zero();
};

// One step: i=s(Wx+Uh+b)_i, f, o likewise, g=tanh(.), c=f*c_prev+i*g, h=o*tanh(c).
// Throws NumericError on non-finite inputs.
std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_cell_forward(const LstmParams& p,
                                                              const Eigen::VectorXd& x,
                                                              const Eigen::VectorXd& h_prev,
                                                              const Eigen::VectorXd& c_prev);

// Cached activations of a full unrolled pass (columns are time steps).
struct LstmTrace {
  Eigen::MatrixXd gates;  // 4H x T, post-nonlinearity
  Eigen::MatrixXd cells;  // H x T
  Eigen::MatrixXd hidden;  // H x T
};

// Runs the cell over the columns of `inputs` (left to right) from zero state.
LstmTrace lstm_forward(const LstmParams& p, const Eigen::MatrixXd& inputs);

// Backpropagation through time. `d_hidden` holds dLoss/dh_t for each column.
// Parameter gradients accumulate into `grads`; returns dLoss/dinputs.
Eigen::MatrixXd lstm_backward(const LstmParams& p, const Eigen::MatrixXd& inputs,
                              const LstmTrace& trace, const Eigen::MatrixXd& d_hidden,
                              LstmParams& grads);

}  // namespace ged

#include "ged/lstm.hpp"

#include <cmath>

#include "ged/error.hpp"
#include "ged/random.hpp"

namespace ged {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void activate(Eigen::Ref<Eigen::VectorXd> a, Eigen::Index h) {
  for (Eigen::Index k = 0; k < 3 * h; ++k) a(k) = sigmoid(a(k));
  for (Eigen::Index k = 3 * h; k < 4 * h; ++k) a(k) = std::tanh(a(k));
}

}  // namespace

LstmParams::LstmParams(int input_dim, int hidden_dim)
    : W(Eigen::MatrixXd::Zero(4 * hidden_dim, input_dim)),
      U(Eigen::MatrixXd::Zero(4 * hidden_dim, hidden_dim)),
      b(Eigen::MatrixXd::Zero(4 * hidden_dim, 1)) {}

void LstmParams::init(Rng& rng) {
  const double h = static_cast<double>(hidden_dim());
  const double wr = std::sqrt(6.0 / (static_cast<double>(input_dim()) + h));
  const double ur = std::sqrt(6.0 / (2.0 * h));
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.uniform(-wr, wr);
  for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = rng.uniform(-ur, ur);
  b.setZero();
}

void LstmParams::set_zero() {
  W.setZero();
  U.setZero();
  b.setZero();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_cell_forward(const LstmParams& p,
                                                              const Eigen::VectorXd& x,
                                                              const Eigen::VectorXd& h_prev,
                                                              const Eigen::VectorXd& c_prev) {
  if (!x.allFinite() || !h_prev.allFinite() || !c_prev.allFinite())
    throw NumericError("non-finite input to LSTM cell");
  const Eigen::Index h = p.hidden_dim();
  if (x.size() != p.input_dim() || h_prev.size() != h || c_prev.size() != h)
    throw ValidationError("LSTM cell dimension mismatch");
  Eigen::VectorXd a = p.W * x + p.U * h_prev + p.b.col(0);
  activate(a, h);
  Eigen::VectorXd c = a.segment(h, h).cwiseProduct(c_prev) +
                      a.segment(0, h).cwiseProduct(a.segment(3 * h, h));
  Eigen::VectorXd hn = a.segment(2 * h, h).cwiseProduct(c.array().tanh().matrix());
  return {std::move(hn), std::move(c)};
}

LstmTrace lstm_forward(const LstmParams& p, const Eigen::MatrixXd& inputs) {
  const Eigen::Index h = p.hidden_dim();
  const Eigen::Index steps = inputs.cols();
  LstmTrace tr;
  tr.gates.resize(4 * h, steps);
  tr.cells.resize(h, steps);
  tr.hidden.resize(h, steps);
  // Input projections for all steps at once.
  tr.gates.noalias() = p.W * inputs;
  tr.gates.colwise() += p.b.col(0);
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    auto a = tr.gates.col(t);
    a.noalias() += p.U * h_prev;
    activate(a, h);
    tr.cells.col(t) = a.segment(h, h).cwiseProduct(c_prev) +
                      a.segment(0, h).cwiseProduct(a.segment(3 * h, h));
    tr.hidden.col(t) = a.segment(2 * h, h).cwiseProduct(tr.cells.col(t).array().tanh().matrix());
    h_prev = tr.hidden.col(t);
    c_prev = tr.cells.col(t);
  }
  return tr;
}

Eigen::MatrixXd lstm_backward(const LstmParams& p, const Eigen::MatrixXd& inputs,
                              const LstmTrace& tr, const Eigen::MatrixXd& d_hidden,
                              LstmParams& grads) {
  const Eigen::Index h = p.hidden_dim();
  const Eigen::Index steps = inputs.cols();
  Eigen::MatrixXd d_pre(4 * h, steps);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto a = tr.gates.col(t);
    const auto i = a.segment(0, h).array();
    const auto f = a.segment(h, h).array();
    const auto o = a.segment(2 * h, h).array();
    const auto g = a.segment(3 * h, h).array();
    const Eigen::ArrayXd tc = tr.cells.col(t).array().tanh();
    const Eigen::ArrayXd c_prev =
        t > 0 ? Eigen::ArrayXd(tr.cells.col(t - 1).array()) : Eigen::ArrayXd::Zero(h);

    const Eigen::ArrayXd dh = d_hidden.col(t).array() + dh_next.array();
    const Eigen::ArrayXd dc = dc_next.array() + dh * o * (1.0 - tc * tc);
    auto da = d_pre.col(t);
    da.segment(0, h) = (dc * g * i * (1.0 - i)).matrix();
    da.segment(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
    da.segment(2 * h, h) = (dh * tc * o * (1.0 - o)).matrix();
    da.segment(3 * h, h) = (dc * i * (1.0 - g * g)).matrix();

    dc_next = (dc * f).matrix();
    dh_next.noalias() = p.U.transpose() * da;
    if (t > 0) grads.U.noalias() += da * tr.hidden.col(t - 1).transpose();
  }
  grads.W.noalias() += d_pre * inputs.transpose();
  grads.b.col(0) += d_pre.rowwise().sum();
  return p.W.transpose() * d_pre;
}

}  // namespace ged

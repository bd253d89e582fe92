#pragma once

// Loop-based reference implementations of every reduction stage. They share
// no code with the engine: plain nested vectors, fixed ascending loops, no
// sorting helpers. Tests treat them as ground truth.

#include <cstddef>
#include <utility>
#include <vector>

namespace ficoco::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;
using Sets = std::vector<std::vector<std::size_t>>;

/// Throws std::invalid_argument for instances larger than 64 tokens.
void guard(std::size_t n);

/// Softmax(X Wq (X Wk)^T / sqrt(D)), element by element.
Mat attention(const Mat& x, const Mat& wq, const Mat& wk, bool causal);

Vec score_v(const Mat& a_vv, const Vec& a_cls, double lambda);
Vec score_v_columns(const Mat& a_vv, const Vec& a_cls, double lambda);
Vec score_l(const Mat& a_vv, const Mat& a_tv, double beta);

/// keys[h][t][d]; visual[t] marks visual rows.
Vec key_mean(const std::vector<Mat>& keys, const std::vector<bool>& visual);

/// cells[i] = (row, col) of alive token i; ties go to the smaller i.
Vec penalty(const Vec& scores, const std::vector<std::pair<std::size_t, std::size_t>>& cells,
            std::size_t window, double coefficient);

/// Repeated argmax; returns (source, target).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> select(const Vec& scores, std::size_t n);

Mat correlation_v(const Mat& a_vv, const std::vector<std::size_t>& source,
                  const std::vector<std::size_t>& target);
Mat correlation_l(const Mat& a_vv, const Mat& a_tv, const std::vector<std::size_t>& source,
                  const std::vector<std::size_t>& target, double gamma, bool causal);

Vec thresholds(const Mat& c, double epsilon);

struct Plan {
  Sets targets_of;  // J_i
  Sets sources_of;  // I_j
  Mat alpha;        // dense |S| x |T|, zero outside J_i
};

Plan assignments(const Mat& c, const Vec& tau);

/// Weighted compression over a dense alpha (entries outside the plan are ignored via sets).
Mat compress(const Mat& targets, const Mat& sources, const Plan& plan);
Mat compress_average(const Mat& targets, const Mat& sources, const Plan& plan);

/// Token roles for the whole-layer oracle.
enum class Role { Cls, Visual, Text };

struct LayerParams {
  bool decoder = false;
  double weight = 0.35;  // lambda (encoder) or beta (decoder)
  double gamma = 0.6;
  double epsilon = 0.998;
  bool penalty = true;  // encoder only
  std::size_t window = 2;
  double coefficient = 2.0;
  bool causal = false;
};

struct LayerOutcome {
  Vec scores;                        // after the penalty, if any
  std::vector<std::size_t> source;   // positions among visual tokens
  std::vector<std::size_t> target;
  Plan plan;
  Mat x;                             // surviving rows, original order
  std::vector<Role> roles;
};

/// One full reduction step from head-mean attention. `task` is the encoder's
/// CLS row or its key-mean stand-in (ignored by the decoder); `cells` holds the
/// grid cell of each visual token in order.
LayerOutcome reduce_layer(const Mat& x, const std::vector<Role>& roles,
                          const std::vector<std::pair<std::size_t, std::size_t>>& cells, const Mat& attention,
                          const Vec& task, const LayerParams& params, std::size_t n_discard);

}  // namespace ficoco::oracle

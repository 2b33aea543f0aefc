#include "samslr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace samslr::losses {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double swish(double x) { return x * sigmoid(x); }

Tensor swish(const Tensor& x) {
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) out[i] = swish(out[i]);
  return out;
}

double swish_grad(double x) {
  double s = sigmoid(x);
  return s + x * s * (1.0 - s);
}

SmoothedLabelDistribution smooth_labels(int true_class, int num_classes, double epsilon) {
  if (num_classes < 2) throw std::invalid_argument("smooth_labels: need at least 2 classes");
  if (true_class < 0 || true_class >= num_classes)
    throw std::invalid_argument("smooth_labels: class index out of range");
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("smooth_labels: epsilon must be in [0,1)");
  SmoothedLabelDistribution d;
  d.epsilon = epsilon;
  d.num_classes = num_classes;
  d.true_class = true_class;
  d.values.assign(static_cast<size_t>(num_classes), epsilon / num_classes);
  d.values[static_cast<size_t>(true_class)] += 1.0 - epsilon;
  return d;
}

double log_sum_exp(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double e : x) s += std::exp(e - m);
  return m + std::log(s);
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

double smoothed_cross_entropy(const std::vector<double>& logits, int true_class,
                              double epsilon) {
  for (double l : logits)
    if (!std::isfinite(l)) throw std::invalid_argument("smoothed_cross_entropy: non-finite logit");
  auto q = smooth_labels(true_class, static_cast<int>(logits.size()), epsilon);
  double lse = log_sum_exp(logits);
  // -sum q'(k) log p(k) = lse - sum q'(k) logit_k  since q' sums to 1
  double dot = 0.0;
  for (size_t k = 0; k < logits.size(); ++k) dot += q.values[k] * logits[k];
  return lse - dot;
}

double smoothed_cross_entropy_grad(const std::vector<double>& logits, int true_class,
                                   double epsilon, std::vector<double>& grad_out) {
  auto q = smooth_labels(true_class, static_cast<int>(logits.size()), epsilon);
  double lse = log_sum_exp(logits);
  grad_out.resize(logits.size());
  double dot = 0.0;
  for (size_t k = 0; k < logits.size(); ++k) {
    grad_out[k] = std::exp(logits[k] - lse) - q.values[k];
    dot += q.values[k] * logits[k];
  }
  return lse - dot;
}

}  // namespace samslr::losses

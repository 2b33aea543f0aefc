#pragma once

#include <vector>

#include "samslr/tensor.hpp"

namespace samslr::losses {

double sigmoid(double x);

/// x * sigmoid(x), applied element-wise.
double swish(double x);
Tensor swish(const Tensor& x);

/// d/dx [x * sigmoid(x)] = sigmoid(x) + x * sigmoid(x) * (1 - sigmoid(x)).
double swish_grad(double x);

struct SmoothedLabelDistribution {
  double epsilon = 0.0;
  int num_classes = 0;
  int true_class = 0;
  std::vector<double> values;  // (1-eps) one-hot + eps/K
};

SmoothedLabelDistribution smooth_labels(int true_class, int num_classes, double epsilon);

/// log(sum_i exp(x_i)), stable against overflow.
double log_sum_exp(const std::vector<double>& x);

std::vector<double> softmax(const std::vector<double>& logits);

/// -sum_k q'(k) log softmax(logits)_k with q' from smooth_labels.
double smoothed_cross_entropy(const std::vector<double>& logits, int true_class,
                              double epsilon);

/// Loss together with its gradient w.r.t. the logits: softmax(logits) - q'.
double smoothed_cross_entropy_grad(const std::vector<double>& logits, int true_class,
                                   double epsilon, std::vector<double>& grad_out);

}  // namespace samslr::losses

#pragma once

#include <span>
#include <string>
#include <vector>

#include "lethe/corpus.hpp"
#include "lethe/matrix.hpp"
#include "lethe/model.hpp"

namespace lethe {

// Mean of feature vectors over the benign exemplar corpus; the target the
// alignment loss pulls generations toward.
struct ClusterCenter {
    std::vector<double> center;
    int source_count{0};
};

struct LossBreakdown {
    double negative{0.0};
    double align{0.0};
    double kl{0.0};
    double w_neg{0.0};
    double w_align{0.0};
    double w_kl{0.0};
    double total{0.0};
};

// Per-position probability rows from the frozen reference (p) and the current
// model (q); both L x V, each row a distribution.
struct DistributionPair {
    Matrix p;
    Matrix q;
};

// A loss value together with its gradient over the model's trainable
// parameters.
struct TermGrad {
    double value{0.0};
    std::vector<double> grad;
};

// Negated mean per-token cross-entropy of y under the model, teacher-forced
// after prompt x. Always <= 0; descending it pushes the model away from y.
double negative_loss(const ModelHandle& model, const std::string& x, const std::string& y);
TermGrad negative_loss_grad(const ModelHandle& model, const std::string& x, const std::string& y);

ClusterCenter cluster_center(const ModelHandle& model, const Corpus& good);

// Squared distance between the feature vector of a fixed text and the center.
// This is the differentiable core: gradient flows through the teacher-forced
// encoding of the text.
double align_loss_fixed(const ModelHandle& model, const std::string& text,
                        const ClusterCenter& center);
TermGrad align_loss_fixed_grad(const ModelHandle& model, const std::string& text,
                               const ClusterCenter& center);

// Greedy-generates a continuation for x, then measures the fixed-text
// alignment of that generation. Empty generation scores 0.
double align_loss(const ModelHandle& model, const std::string& x, const ClusterCenter& center,
                  int max_new = 64);

// Per-position argmax token ids over an L x V score matrix; ties go to the
// smaller id.
std::vector<int> derive_pseudo_labels(const Matrix& center_scores);

// Mean over positions of forward KL D(P||Q). Probabilities are floored at
// 1e-12 before any log; exact 0 when p and q coincide.
double kl_preservation_loss(const DistributionPair& pair);

DistributionPair distribution_pair(const ModelHandle& reference, const ModelHandle& model,
                                   std::span<const int> tokens);

// Forward KL between reference and model next-token distributions over the
// concatenated prompt+response positions of one retain sample.
double kl_retention(const ModelHandle& reference, const ModelHandle& model, const std::string& x,
                    const std::string& y);
TermGrad kl_retention_grad(const ModelHandle& reference, const ModelHandle& model,
                           const std::string& x, const std::string& y);

// Weighted combination of the three terms for one unlearn sample plus a
// retain batch. Terms with zero weight are skipped and reported as 0.
LossBreakdown composite_loss(const ModelHandle& model, const ModelHandle& reference,
                             const Sample& sample, const ClusterCenter& center,
                             std::span<const Sample> retain_batch, double w_neg, double w_align,
                             double w_kl, int align_max_new = 64);

}  // namespace lethe

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace litrev {

/// Scores a candidate paper's suitability as a literature review from its
/// title and abstract. Implementations must be deterministic for a fixed
/// trained state.
class ReviewClassifier {
public:
    virtual ~ReviewClassifier() = default;
    virtual double classify(const std::string& title, const std::string& abstract) const = 0;
    virtual double threshold() const = 0;
};

/// Assigns probability 1 to everything; useful when no labeled data exists.
class AcceptAllClassifier final : public ReviewClassifier {
public:
    double classify(const std::string&, const std::string&) const override { return 1.0; }
    double threshold() const override { return 0.5; }
};

struct LabeledDoc {
    std::string title;
    std::string abstract;
    bool suitable = false;
};

struct StandinTrainOptions {
    double learning_rate = 0.5;
    int iterations = 600;
    double l2 = 1e-4;
    double threshold = 0.5;
    std::uint64_t seed = 0;  // training is seed-independent (zero init), kept for the interface
};

/// Bag-of-words-and-bigrams logistic regression fit by full-batch gradient
/// descent on the mean regularized logistic loss. Deterministic.
class StandinClassifier final : public ReviewClassifier {
public:
    static StandinClassifier train(const std::vector<LabeledDoc>& labeled,
                                   const StandinTrainOptions& options = {});

    double classify(const std::string& title, const std::string& abstract) const override;
    double threshold() const override { return threshold_; }

private:
    std::map<std::string, double> weights_;
    double bias_ = 0.0;
    double threshold_ = 0.5;
};

/// Unigram + bigram count features over the concatenated title and abstract.
std::map<std::string, double> classifier_features(const std::string& title,
                                                  const std::string& abstract);

}  // namespace litrev

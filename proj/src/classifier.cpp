#include "litrev/classifier.hpp"

#include <cmath>
#include <stdexcept>

#include "litrev/metrics.hpp"

namespace litrev {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::map<std::string, double> classifier_features(const std::string& title,
                                                  const std::string& abstract) {
    const TokenList tokens = tokenize(title + " " + abstract, false);
    std::map<std::string, double> features;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        features[tokens[i]] += 1.0;
        if (i + 1 < tokens.size()) {
            features[tokens[i] + '\x1f' + tokens[i + 1]] += 1.0;
        }
    }
    return features;
}

StandinClassifier StandinClassifier::train(const std::vector<LabeledDoc>& labeled,
                                           const StandinTrainOptions& options) {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    for (const auto& doc : labeled) {
        (doc.suitable ? positives : negatives) += 1;
    }
    if (positives < 2 || negatives < 2) {
        throw std::runtime_error("degenerate_labels");
    }

    std::vector<std::map<std::string, double>> features;
    features.reserve(labeled.size());
    std::map<std::string, double> weights;  // sorted keys keep updates deterministic
    for (const auto& doc : labeled) {
        features.push_back(classifier_features(doc.title, doc.abstract));
        for (const auto& kv : features.back()) weights[kv.first];
    }

    double bias = 0.0;
    const double scale = 1.0 / static_cast<double>(labeled.size());
    for (int iter = 0; iter < options.iterations; ++iter) {
        std::map<std::string, double> grad;
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            double z = bias;
            for (const auto& [key, value] : features[i]) z += weights[key] * value;
            const double err = sigmoid(z) - (labeled[i].suitable ? 1.0 : 0.0);
            for (const auto& [key, value] : features[i]) grad[key] += err * value;
            grad_bias += err;
        }
        for (auto& [key, w] : weights) {
            const auto it = grad.find(key);
            const double g = (it != grad.end() ? it->second * scale : 0.0) + options.l2 * w;
            w -= options.learning_rate * g;
        }
        bias -= options.learning_rate * grad_bias * scale;
    }

    StandinClassifier classifier;
    classifier.weights_ = std::move(weights);
    classifier.bias_ = bias;
    classifier.threshold_ = options.threshold;
    return classifier;
}

double StandinClassifier::classify(const std::string& title, const std::string& abstract) const {
    double z = bias_;
    for (const auto& [key, value] : classifier_features(title, abstract)) {
        const auto it = weights_.find(key);
        if (it != weights_.end()) z += it->second * value;
    }
    return sigmoid(z);
}

}  // namespace litrev

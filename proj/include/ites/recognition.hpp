// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ites/taskmodel.hpp"

namespace ites::recognition {

using taskmodel::TaskLabel;

struct Example {
  std::string sentence;
  TaskLabel label = TaskLabel::Grasp;
  friend bool operator==(const Example&, const Example&) = default;
};

using Corpus = std::vector<Example>;

/// Lowercases ASCII and splits on every non-alphanumeric byte.
std::vector<std::string> tokenize(std::string_view text);

struct Prediction {
  TaskLabel label = TaskLabel::Grasp;
  /// Posterior per class, in canonical label order, summing to 1.
  std::vector<std::pair<TaskLabel, double>> scores;

  double score(TaskLabel l) const;
};

/// Sentence -> task label. Implementations must be immutable after
/// construction so they can be shared across threads.
class TaskClassifier {
 public:
  virtual ~TaskClassifier() = default;
  /// Throws Error(BadRequest, "no content") if the text has no tokens.
  virtual Prediction predict(std::string_view text) const = 0;
};

/// Multinomial naive Bayes over a bag of words with additive smoothing.
class NaiveBayesClassifier final : public TaskClassifier {
 public:
  /// Throws Error(BadRequest) on an empty corpus or an empty sentence.
  static NaiveBayesClassifier train(const Corpus& corpus, double alpha = 1.0);

  /// Versioned text dump and its inverse. load(dump()) predicts identically.
  std::string dump() const;
  static NaiveBayesClassifier load(std::string_view text);

  Prediction predict(std::string_view text) const override;

  const std::vector<TaskLabel>& classes() const { return classes_; }
  double alpha() const { return alpha_; }
  double prior(TaskLabel label) const;
  /// Smoothed P(token | class); tokens outside the vocabulary get the
  /// zero-count value alpha / (N_class + alpha * V).
  double likelihood(TaskLabel label, std::string_view token) const;
  std::size_t vocabulary_size() const { return vocabulary_.size(); }
  bool in_vocabulary(std::string_view token) const;

 private:
  std::optional<std::size_t> class_slot(TaskLabel label) const;

  double alpha_ = 1.0;
  std::vector<TaskLabel> classes_;             // canonical order
  std::vector<std::uint64_t> class_sentences_;  // per class
  std::vector<double> priors_;                 // per class
  std::vector<std::uint64_t> class_tokens_;    // per class
  std::map<std::string, std::size_t, std::less<>> vocabulary_;
  std::vector<std::vector<std::uint64_t>> counts_;  // [token index][class slot]
};

struct CrossValidation {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
  std::vector<TaskLabel> classes;
  /// confusion[true][predicted], indexed like `classes`.
  std::vector<std::vector<int>> confusion;
};

/// Stratified k-fold cross-validation. Each class is shuffled with `seed` and
/// dealt round-robin into folds. Throws Error(BadRequest) if any class has
/// fewer than `folds` sentences.
CrossValidation cross_validate(const Corpus& corpus, int folds = 10, std::uint64_t seed = 0,
                               double alpha = 1.0);

/// CSV with a header row of predicted labels, one row per true label.
std::string confusion_csv(const CrossValidation& cv);

/// Longest vocabulary entry whose token sequence appears in tokenize(text).
/// Equal-length matches resolve to the leftmost occurrence.
std::optional<std::string> extract_object_name(std::string_view text,
                                               std::span<const std::string> vocabulary);

/// Object-name extraction behind an interface so a parser-based backend can
/// replace vocabulary matching.
class ObjectNameExtractor {
 public:
  virtual ~ObjectNameExtractor() = default;
  virtual std::optional<std::string> extract(std::string_view text) const = 0;
};

class VocabularyMatcher final : public ObjectNameExtractor {
 public:
  explicit VocabularyMatcher(std::vector<std::string> vocabulary) : vocabulary_(std::move(vocabulary)) {}
  std::optional<std::string> extract(std::string_view text) const override {
    return extract_object_name(text, vocabulary_);
  }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

 private:
  std::vector<std::string> vocabulary_;
};

/// CSV `label,sentence` with a required header row.
Corpus parse_corpus_csv(std::string_view text);
std::string corpus_csv(const Corpus& corpus);

/// The bundled seed corpus (compiled into the library).
const Corpus& seed_corpus();
/// Classifier trained once on seed_corpus() with alpha = 1.
const NaiveBayesClassifier& seed_classifier();

}  // namespace ites::recognition

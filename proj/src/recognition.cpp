// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/recognition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ites/error.hpp"
#include "ites/random.hpp"
#include "ites/text.hpp"

namespace ites::recognition {

extern const char* const kSeedCorpusCsv;  // generated at build time

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double Prediction::score(TaskLabel l) const {
  for (const auto& [label, p] : scores)
    if (label == l) return p;
  return 0.0;
}

// ---------------------------------------------------------------------------

NaiveBayesClassifier NaiveBayesClassifier::train(const Corpus& corpus, double alpha) {
  if (corpus.empty()) throw bad_request("cannot train on an empty corpus");
  if (!(alpha > 0.0)) throw bad_request("smoothing constant must be positive");

  NaiveBayesClassifier m;
  m.alpha_ = alpha;
  for (auto label : taskmodel::all_labels()) {
    bool present = std::any_of(corpus.begin(), corpus.end(), [&](const Example& e) { return e.label == label; });
    if (present) m.classes_.push_back(label);
  }
  const std::size_t k = m.classes_.size();
  m.class_sentences_.assign(k, 0);
  m.class_tokens_.assign(k, 0);

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus[i];
    auto tokens = tokenize(ex.sentence);
    if (tokens.empty())
      throw bad_request("corpus sentence " + std::to_string(i + 1) + " has no content",
                        {{"row", std::to_string(i + 1)}});
    const std::size_t slot = *m.class_slot(ex.label);
    ++m.class_sentences_[slot];
    for (auto& tok : tokens) {
      auto [it, inserted] = m.vocabulary_.try_emplace(tok, m.counts_.size());
      if (inserted) m.counts_.emplace_back(k, 0);
      ++m.counts_[it->second][slot];
      ++m.class_tokens_[slot];
    }
  }
  m.priors_.resize(k);
  for (std::size_t c = 0; c < k; ++c)
    m.priors_[c] = static_cast<double>(m.class_sentences_[c]) / static_cast<double>(corpus.size());
  return m;
}

std::optional<std::size_t> NaiveBayesClassifier::class_slot(TaskLabel label) const {
  auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

double NaiveBayesClassifier::prior(TaskLabel label) const {
  auto slot = class_slot(label);
  return slot ? priors_[*slot] : 0.0;
}

bool NaiveBayesClassifier::in_vocabulary(std::string_view token) const {
  return vocabulary_.find(token) != vocabulary_.end();
}

double NaiveBayesClassifier::likelihood(TaskLabel label, std::string_view token) const {
  auto slot = class_slot(label);
  if (!slot) throw bad_request("label " + std::string(taskmodel::code(label)) + " is not a model class");
  const double v = static_cast<double>(vocabulary_.size());
  double count = 0.0;
  if (auto it = vocabulary_.find(token); it != vocabulary_.end())
    count = static_cast<double>(counts_[it->second][*slot]);
  return (count + alpha_) / (static_cast<double>(class_tokens_[*slot]) + alpha_ * v);
}

Prediction NaiveBayesClassifier::predict(std::string_view text) const {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw bad_request("no content", {{"text", std::string(text)}});

  // Aggregate into a bag keyed by vocabulary index; iterating the bag in index
  // order makes the scores independent of token order.
  std::map<std::size_t, std::uint64_t> bag;
  for (const auto& tok : tokens)
    if (auto it = vocabulary_.find(tok); it != vocabulary_.end()) ++bag[it->second];

  const std::size_t k = classes_.size();
  const double v = static_cast<double>(vocabulary_.size());
  std::vector<double> logp(k);
  for (std::size_t c = 0; c < k; ++c) {
    double lp = std::log(priors_[c]);
    const double denom = static_cast<double>(class_tokens_[c]) + alpha_ * v;
    for (const auto& [index, n] : bag)
      lp += static_cast<double>(n) * std::log((static_cast<double>(counts_[index][c]) + alpha_) / denom);
    logp[c] = lp;
  }

  const double top = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (double lp : logp) z += std::exp(lp - top);

  Prediction p;
  std::size_t best = 0;
  for (std::size_t c = 0; c < k; ++c) {
    p.scores.emplace_back(classes_[c], std::exp(logp[c] - top) / z);
    if (logp[c] > logp[best]) best = c;
  }
  p.label = classes_[best];
  return p;
}

std::string NaiveBayesClassifier::dump() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", alpha_);
  out << "nbmodel v1\n";
  out << "alpha " << buf << '\n';
  out << "classes " << classes_.size() << '\n';
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%.17g", priors_[c]);
    out << "class " << taskmodel::code(classes_[c]) << " sentences " << class_sentences_[c] << " tokens "
        << class_tokens_[c] << " prior " << buf << '\n';
  }
  // Tokens in index order so that reload reproduces identical indices.
  std::vector<const std::string*> by_index(vocabulary_.size());
  for (const auto& [tok, idx] : vocabulary_) by_index[idx] = &tok;
  out << "vocabulary " << by_index.size() << '\n';
  for (std::size_t i = 0; i < by_index.size(); ++i) {
    out << *by_index[i];
    for (auto n : counts_[i]) out << ' ' << n;
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

NaiveBayesClassifier NaiveBayesClassifier::load(std::string_view text_in) {
  auto lines = text::split_lines(text_in);
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> Error {
    return bad_request("model line " + std::to_string(pos) + ": " + msg);
  };
  auto next = [&]() -> std::vector<std::string_view> {
    if (pos >= lines.size()) throw fail("unexpected end of model file");
    return text::split_ws(lines[pos++]);
  };

  auto f = next();
  if (f.size() != 2 || f[0] != "nbmodel" || f[1] != "v1") throw fail("expected 'nbmodel v1'");
  NaiveBayesClassifier m;
  f = next();
  if (f.size() != 2 || f[0] != "alpha") throw fail("expected alpha");
  auto alpha = text::to_double(f[1]);
  if (!alpha || !(*alpha > 0.0)) throw fail("invalid alpha");
  m.alpha_ = *alpha;
  f = next();
  auto k = f.size() == 2 && f[0] == "classes" ? text::to_long(f[1]) : std::nullopt;
  if (!k || *k <= 0 || *k > static_cast<long>(taskmodel::kLabelCount)) throw fail("expected class count");
  for (long c = 0; c < *k; ++c) {
    f = next();
    if (f.size() != 8 || f[0] != "class" || f[2] != "sentences" || f[4] != "tokens" || f[6] != "prior")
      throw fail("malformed class line");
    auto label = taskmodel::label_from_code(f[1]);
    auto ns = text::to_long(f[3]);
    auto nt = text::to_long(f[5]);
    auto pr = text::to_double(f[7]);
    if (!label) throw fail("unknown task label '" + std::string(f[1]) + "'");
    if (!ns || !nt || !pr || *ns < 0 || *nt < 0) throw fail("invalid class statistics");
    if (!m.classes_.empty() && taskmodel::index_of(*label) <= taskmodel::index_of(m.classes_.back()))
      throw fail("classes must be listed in canonical order");
    m.classes_.push_back(*label);
    m.class_sentences_.push_back(static_cast<std::uint64_t>(*ns));
    m.class_tokens_.push_back(static_cast<std::uint64_t>(*nt));
    m.priors_.push_back(*pr);
  }
  f = next();
  auto v = f.size() == 2 && f[0] == "vocabulary" ? text::to_long(f[1]) : std::nullopt;
  if (!v || *v < 0) throw fail("expected vocabulary size");
  for (long i = 0; i < *v; ++i) {
    f = next();
    if (f.size() != m.classes_.size() + 1) throw fail("vocabulary row has wrong column count");
    std::vector<std::uint64_t> row;
    for (std::size_t c = 1; c < f.size(); ++c) {
      auto n = text::to_long(f[c]);
      if (!n || *n < 0) throw fail("invalid count");
      row.push_back(static_cast<std::uint64_t>(*n));
    }
    if (!m.vocabulary_.try_emplace(std::string(f[0]), m.counts_.size()).second)
      throw fail("duplicate token '" + std::string(f[0]) + "'");
    m.counts_.push_back(std::move(row));
  }
  f = next();
  if (f.size() != 1 || f[0] != "end") throw fail("expected 'end'");
  return m;
}

// ---------------------------------------------------------------------------

CrossValidation cross_validate(const Corpus& corpus, int folds, std::uint64_t seed, double alpha) {
  if (folds < 2) throw bad_request("cross-validation needs at least two folds");
  if (corpus.empty()) throw bad_request("cannot cross-validate an empty corpus");

  CrossValidation cv;
  std::vector<int> fold_of(corpus.size(), 0);
  Rng rng(seed);
  for (auto label : taskmodel::all_labels()) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus[i].label == label) members.push_back(i);
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(folds))
      throw bad_request("class " + std::string(taskmodel::code(label)) + " has " +
                            std::to_string(members.size()) + " sentences, fewer than " +
                            std::to_string(folds) + " folds",
                        {{"label", std::string(taskmodel::code(label))}});
    cv.classes.push_back(label);
    rng.shuffle(members.begin(), members.end());
    for (std::size_t j = 0; j < members.size(); ++j) fold_of[members[j]] = static_cast<int>(j % folds);
  }

  const std::size_t k = cv.classes.size();
  auto slot = [&](TaskLabel l) {
    return static_cast<std::size_t>(std::find(cv.classes.begin(), cv.classes.end(), l) - cv.classes.begin());
  };
  cv.confusion.assign(k, std::vector<int>(k, 0));

  for (int f = 0; f < folds; ++f) {
    Corpus train_set;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (fold_of[i] == f) test.push_back(i);
      else train_set.push_back(corpus[i]);
    }
    auto model = NaiveBayesClassifier::train(train_set, alpha);
    int correct = 0;
    for (auto i : test) {
      auto pred = model.predict(corpus[i].sentence);
      ++cv.confusion[slot(corpus[i].label)][slot(pred.label)];
      if (pred.label == corpus[i].label) ++correct;
    }
    cv.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
  }
  cv.mean_accuracy = std::accumulate(cv.fold_accuracy.begin(), cv.fold_accuracy.end(), 0.0) /
                     static_cast<double>(folds);
  return cv;
}

std::string confusion_csv(const CrossValidation& cv) {
  std::string out = "true\\predicted";
  for (auto l : cv.classes) out += "," + std::string(taskmodel::code(l));
  out += '\n';
  for (std::size_t i = 0; i < cv.classes.size(); ++i) {
    out += taskmodel::code(cv.classes[i]);
    for (int n : cv.confusion[i]) out += "," + std::to_string(n);
    out += '\n';
  }
  return out;
}

std::optional<std::string> extract_object_name(std::string_view text,
                                               std::span<const std::string> vocabulary) {
  const auto tokens = tokenize(text);
  std::optional<std::string> best;
  std::size_t best_len = 0, best_pos = 0;
  for (const auto& entry : vocabulary) {
    const auto needle = tokenize(entry);
    if (needle.empty() || needle.size() > tokens.size()) continue;
    auto it = std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end());
    if (it == tokens.end()) continue;
    const auto pos = static_cast<std::size_t>(it - tokens.begin());
    if (!best || needle.size() > best_len || (needle.size() == best_len && pos < best_pos)) {
      best = entry;
      best_len = needle.size();
      best_pos = pos;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

Corpus parse_corpus_csv(std::string_view text_in) {
  auto lines = text::split_lines(text_in);
  if (lines.empty()) throw bad_request("corpus file is empty (header row required)");
  auto header = text::csv_fields(lines[0]);
  if (header.size() != 2 || text::trim(header[0]) != "label" || text::trim(header[1]) != "sentence")
    throw bad_request("corpus header must be 'label,sentence'");
  Corpus corpus;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const std::string row = "corpus row " + std::to_string(i + 1);
    std::vector<std::string> fields;
    try {
      fields = text::csv_fields(lines[i]);
    } catch (const Error& e) {
      throw bad_request(row + ": " + e.what());
    }
    // Unquoted sentences may contain commas; everything after the first
    // separator belongs to the sentence.
    if (fields.size() < 2) throw bad_request(row + ": expected label,sentence");
    std::string sentence = fields[1];
    for (std::size_t f = 2; f < fields.size(); ++f) sentence += "," + fields[f];
    auto label = taskmodel::label_from_code(text::trim(fields[0]));
    if (!label) throw bad_request(row + ": unknown task label '" + fields[0] + "'");
    if (text::trim(sentence).empty()) throw bad_request(row + ": empty sentence");
    corpus.push_back({std::string(text::trim(sentence)), *label});
  }
  if (corpus.empty()) throw bad_request("corpus has no sentences");
  return corpus;
}

std::string corpus_csv(const Corpus& corpus) {
  std::string out = "label,sentence\n";
  for (const auto& ex : corpus) {
    out += taskmodel::code(ex.label);
    out += ",\"";
    for (char c : ex.sentence) {
      if (c == '"') out += '"';
      out += c;
    }
    out += "\"\n";
  }
  return out;
}

const Corpus& seed_corpus() {
  static const Corpus corpus = parse_corpus_csv(kSeedCorpusCsv);
  return corpus;
}

const NaiveBayesClassifier& seed_classifier() {
  static const NaiveBayesClassifier model = NaiveBayesClassifier::train(seed_corpus(), 1.0);
  return model;
}

}  // namespace ites::recognition

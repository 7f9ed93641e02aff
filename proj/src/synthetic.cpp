#include "prunerank/synthetic.hpp"

#include <random>
#include <string>

namespace prunerank {

namespace {

using Rng = std::mt19937_64;

size_t pick(Rng& rng, size_t n) { return static_cast<size_t>(rng() % n); }

// Consonant-vowel syllable words. Keeping vocabularies on disjoint letters
// guarantees disjoint character 3-grams between them.
std::string make_word(Rng& rng, const std::vector<std::string>& syllables, size_t min_syl,
                      size_t max_syl) {
  const size_t count = min_syl + pick(rng, max_syl - min_syl + 1);
  std::string out;
  for (size_t i = 0; i < count; ++i) out += syllables[pick(rng, syllables.size())];
  return out;
}

std::vector<std::string> cv_syllables(std::string_view consonants, std::string_view vowels) {
  std::vector<std::string> out;
  for (char c : consonants) {
    for (char v : vowels) {
      out.push_back(std::string{c, v});
    }
  }
  return out;
}

}  // namespace

std::vector<TrainingExample> make_separable_training_set(size_t n, uint64_t seed) {
  Rng rng(seed);
  // Relevant words carry one of these grams, planted verbatim in the query.
  const std::vector<std::string> planted = {"zor", "bel", "mak"};
  const auto rel_syllables = cv_syllables("bklmz", "aeo");
  // Irrelevant words carry a decoy gram instead. Their letters avoid the
  // relevant set and the query words, so the gram sets stay disjoint.
  const std::vector<std::string> decoys = {"pux", "tiv", "xip"};
  const auto irr_syllables = cv_syllables("ptvx", "ui");

  std::vector<TrainingExample> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t gram_index = pick(rng, planted.size());
    const std::string& gram = planted[gram_index];
    const std::string& decoy = decoys[pick(rng, decoys.size())];
    TrainingExample ex;
    ex.query = "find " + gram;
    ex.language = "en";
    ex.source = ExampleSource::english_original;

    // Half the sentences relevant, half not, with a fixed word count per
    // example. Balanced token classes keep the 0.5 decision cutoff meaningful
    // for a model trained on a short budget: the bias has no class-imbalance
    // drift to soak up.
    const size_t n_sentences = pick(rng, 2) == 0 ? 2 : 4;
    const size_t n_words = 3 + pick(rng, 4);
    std::vector<int> labels(n_sentences, 0);
    for (size_t s = 0; s < n_sentences / 2; ++s) labels[s] = 1;
    for (size_t s = n_sentences - 1; s > 0; --s) {
      std::swap(labels[s], labels[pick(rng, s + 1)]);
    }
    for (size_t s = 0; s < n_sentences; ++s) {
      std::string sentence;
      for (size_t w = 0; w < n_words; ++w) {
        if (w > 0) sentence += ' ';
        // Syllable padding on one side of the planted or decoy gram.
        if (labels[s] == 1) {
          const std::string& syl = rel_syllables[pick(rng, rel_syllables.size())];
          sentence += pick(rng, 2) == 0 ? syl + gram : gram + syl;
        } else {
          const std::string& syl = irr_syllables[pick(rng, irr_syllables.size())];
          sentence += pick(rng, 2) == 0 ? syl + decoy : decoy + syl;
        }
      }
      ex.sentences.push_back(std::move(sentence));
      ex.sentence_labels.push_back(labels[s]);
    }
    // Tied to the query gram, which the rank head can read off the features.
    ex.teacher_score = 0.45 + 0.05 * static_cast<double>(gram_index);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<EvalRecord> make_bilingual_qa_set(size_t n, uint64_t seed) {
  Rng rng(seed);
  // Name and answer words stay clear of both question templates; distractor
  // letters stay clear of everything else.
  const auto name_syllables = cv_syllables("bcdfgklm", "aei");
  const auto noise_syllables = cv_syllables("nprstvz", "ou");

  auto noise_sentence = [&](size_t min_words) {
    const size_t n_words = min_words + pick(rng, 2);
    std::string out;
    for (size_t w = 0; w < n_words; ++w) {
      if (w > 0) out += ' ';
      out += make_word(rng, noise_syllables, 2, 3);
    }
    out += '.';
    return out;
  };

  std::vector<EvalRecord> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    std::string name1 = make_word(rng, name_syllables, 2, 3);
    std::string name2 = make_word(rng, name_syllables, 2, 3);
    while (name2 == name1) name2 = make_word(rng, name_syllables, 2, 3);
    std::string answer = make_word(rng, name_syllables, 2, 3);
    while (answer == name1 || answer == name2) answer = make_word(rng, name_syllables, 2, 3);

    EvalRecord rec;
    const bool french = i % 2 == 1;
    rec.language = french ? "fr" : "en";
    std::string relevant;
    if (french) {
      rec.query = "quelle couleur montre " + name1 + " " + name2;
      relevant = name1 + " " + name2 + " montre couleur " + answer + ".";
    } else {
      rec.query = "what color shows the " + name1 + " " + name2;
      relevant = name1 + " " + name2 + " shows color " + answer + ".";
    }
    rec.gold_answers = {answer};

    // One passage hides the relevant sentence between distractors; the other
    // two are pure noise.
    const size_t relevant_passage = pick(rng, 3);
    const size_t relevant_slot = pick(rng, 3);
    std::vector<std::string> ids;
    for (size_t p = 0; p < 3; ++p) {
      std::string passage;
      for (size_t s = 0; s < 3; ++s) {
        if (!passage.empty()) passage += ' ';
        if (p == relevant_passage && s == relevant_slot) {
          passage += relevant;
        } else {
          passage += noise_sentence(3);
        }
      }
      rec.passages.push_back(std::move(passage));
      ids.push_back("r" + std::to_string(i) + "-p" + std::to_string(p));
    }
    rec.relevant_ids = std::vector<std::string>{ids[relevant_passage]};

    // A plausible retriever ranking: the relevant passage usually first.
    std::vector<std::string> ranking = ids;
    if (relevant_passage != 0) {
      std::swap(ranking[0], ranking[relevant_passage]);
    }
    if (pick(rng, 10) < 3) {
      std::swap(ranking[0], ranking[1]);  // sometimes the retriever misses
    }
    rec.ranking = std::move(ranking);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace prunerank

#include <gtest/gtest.h>

#include <set>

#include "lexcluster/brown.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lexcluster;
using testing_support::unlabeled_corpus;
using Docs = std::vector<std::vector<std::string>>;

namespace {

BigramCounts counts_of(const Docs& docs, std::uint64_t min_count = 1) {
  Corpus c = unlabeled_corpus(docs);
  return count_bigrams(c, build_vocabulary(c, min_count));
}

/// Documents as vocabulary ids, for the oracle.
std::vector<std::vector<int>> ids_of(const Docs& docs, const Vocabulary& vocab) {
  std::vector<std::vector<int>> out;
  for (const auto& d : docs) {
    std::vector<int> row;
    for (const auto& t : d)
      if (auto i = vocab.find(t)) row.push_back(static_cast<int>(*i));
    out.push_back(row);
  }
  return out;
}

/// Markov-chain documents over `v` words with a random sparse transition
/// table, so the bigram distribution carries real structure.
Docs random_docs(std::size_t v, std::size_t n_docs, Rng& rng) {
  std::vector<std::vector<double>> next(v, std::vector<double>(v));
  for (auto& row : next)
    for (auto& p : row) p = rng.bernoulli(0.4) ? rng.uniform() : 0.0;
  Docs docs;
  for (std::size_t d = 0; d < n_docs; ++d) {
    std::vector<std::string> doc;
    std::size_t w = rng.below(v);
    const std::size_t len = 2 + rng.below(8);
    for (std::size_t i = 0; i < len; ++i) {
      doc.push_back("w" + std::to_string(w));
      double total = 0;
      for (double p : next[w]) total += p;
      if (total == 0) {
        w = rng.below(v);
        continue;
      }
      double r = rng.uniform() * total;
      std::size_t k = 0;
      while (k + 1 < v && r >= next[w][k]) r -= next[w][k++];
      w = k;
    }
    docs.push_back(doc);
  }
  return docs;
}

/// Every alternating three-token document over A = {a1, a2}, B = {b1, b2}.
Docs alternating_docs() {
  Docs docs;
  const std::vector<std::string> a{"a1", "a2"}, b{"b1", "b2"};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        docs.push_back({a[i], b[j], a[k]});
        docs.push_back({b[i], a[j], b[k]});
      }
  return docs;
}

}  // namespace

TEST(CountBigrams, SingleDocument) {
  BigramCounts c = counts_of({{"a", "b", "a"}});
  ASSERT_EQ(c.vocab.words(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.unigram, (std::vector<std::uint64_t>{2, 1}));
  ASSERT_EQ(c.bigrams.size(), 2u);
  EXPECT_EQ(c.bigrams[0].left, 0u);
  EXPECT_EQ(c.bigrams[0].right, 1u);
  EXPECT_EQ(c.bigrams[0].count, 1u);
  EXPECT_EQ(c.bigrams[1].left, 1u);
  EXPECT_EQ(c.bigrams[1].right, 0u);
  EXPECT_EQ(c.total_tokens, 3u);
}

TEST(CountBigrams, NoCrossDocumentPairs) {
  BigramCounts c = counts_of({{"a"}, {"b"}});
  EXPECT_TRUE(c.bigrams.empty());
  EXPECT_EQ(c.total_tokens, 2u);
}

TEST(CountBigrams, OutOfVocabularyDroppedBeforePairing) {
  Corpus corpus = unlabeled_corpus({{"a", "x", "b"}, {"a", "b"}});
  Vocabulary vocab({{"a", 2}, {"b", 2}});
  BigramCounts c = count_bigrams(corpus, vocab);
  ASSERT_EQ(c.bigrams.size(), 1u);
  EXPECT_EQ(c.bigrams[0].count, 2u);
  EXPECT_EQ(c.total_tokens, 4u);
}

TEST(CountBigrams, Errors) {
  Corpus corpus = unlabeled_corpus({{"x"}});
  EXPECT_THROW(count_bigrams(corpus, Vocabulary({{"a", 1}})), EmptyInputError);
  Corpus raw({{"1", "a b", std::nullopt, std::nullopt}}, CorpusKind::unlabeled);
  EXPECT_THROW(count_bigrams(raw, Vocabulary({{"a", 1}})), StateError);
}

TEST(CountBigrams, UnigramSumsToTotal) {
  Rng rng(8);
  BigramCounts c = counts_of(random_docs(9, 40, rng));
  std::uint64_t sum = 0;
  for (auto u : c.unigram) sum += u;
  EXPECT_EQ(sum, c.total_tokens);
  for (const auto& b : c.bigrams) {
    EXPECT_LT(b.left, c.vocab.size());
    EXPECT_LT(b.right, c.vocab.size());
  }
}

TEST(Ami, SingleClusterIsZero) {
  BigramCounts c = counts_of({{"a", "b", "c", "a"}, {"b", "b"}});
  WordClustering one(c.vocab.words(), std::vector<std::size_t>(c.vocab.size(), 0));
  EXPECT_EQ(average_mutual_information(c, one), 0.0);
}

TEST(Ami, IndependentJointIsZero) {
  BigramCounts c = counts_of({{"a", "a"}, {"a", "b"}, {"b", "a"}, {"b", "b"}});
  WordClustering singletons(c.vocab.words(), {0, 1});
  EXPECT_NEAR(average_mutual_information(c, singletons), 0.0, 1e-15);
}

TEST(Ami, AlternatingSequenceByDirectSummation) {
  // "a b a b a b": bigrams ab x3, ba x2 over 5 pairs.
  // left(a)=3/5, left(b)=2/5, right(b)=3/5, right(a)=2/5.
  BigramCounts c = counts_of({{"a", "b", "a", "b", "a", "b"}});
  WordClustering singletons(c.vocab.words(), {0, 1});
  const double expected = 0.6 * std::log2(0.6 / (0.6 * 0.6)) + 0.4 * std::log2(0.4 / (0.4 * 0.4));
  EXPECT_NEAR(average_mutual_information(c, singletons), expected, 1e-15);
}

TEST(Ami, UncoveredWordIsError) {
  BigramCounts c = counts_of({{"a", "b"}});
  EXPECT_THROW(average_mutual_information(c, WordClustering({"a"}, {0})), VocabularyError);
}

TEST(Brown, TwoWordsMergeOnceLosingAllInformation) {
  BigramCounts c = counts_of({{"a", "b", "a", "b", "a", "b"}});
  Dendrogram d = brown_cluster(c, {});
  ASSERT_EQ(d.merges.size(), 1u);
  const double singletons = average_mutual_information(c, WordClustering(c.vocab.words(), {0, 1}));
  EXPECT_NEAR(d.merges[0].ami_loss, singletons, 1e-12);
  EXPECT_NEAR(d.initial_ami, singletons, 1e-12);
}

TEST(Brown, ParameterErrors) {
  BigramCounts c = counts_of({{"a", "b"}});
  EXPECT_THROW(brown_cluster(c, {1, true, false}), ParameterError);
  EXPECT_THROW(brown_cluster(counts_of({{"a", "a"}}), {}), BoundsError);
}

TEST(Brown, AlternatingClassesMergeWithinClassFirst) {
  const Docs docs = alternating_docs();
  BigramCounts c = counts_of(docs);
  ASSERT_EQ(c.vocab.words(), (std::vector<std::string>{"a1", "a2", "b1", "b2"}));
  Dendrogram d = brown_cluster(c, {4, true, false});
  auto check = oracle::check_brown_merges(ids_of(docs, c.vocab), 4, d.merges);
  EXPECT_TRUE(check.ok) << check.message;
  ASSERT_EQ(d.merges.size(), 3u);
  EXPECT_EQ(d.merges[0], (Merge{0, 1, d.merges[0].ami_loss}));
  EXPECT_EQ(d.merges[1], (Merge{2, 3, d.merges[1].ami_loss}));
  EXPECT_NEAR(d.merges[0].ami_loss, 0.0, 1e-12);
  EXPECT_NEAR(d.merges[2].ami_loss, 1.0, 1e-12);

  WordClustering two = cut(d, 2);
  EXPECT_EQ(two.ids(), (std::vector<std::size_t>{0, 0, 1, 1}));
}

TEST(Brown, MatchesExhaustiveOracleOnSmallVocabularies) {
  Rng rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t v = 3 + static_cast<std::size_t>(trial % 10);
    Docs docs = random_docs(v, 30, rng);
    BigramCounts c = counts_of(docs);
    for (bool exact : {false, true}) {
      Dendrogram d = brown_cluster(c, {c.vocab.size(), true, exact});
      EXPECT_EQ(d.merges.size() + 1, c.vocab.size());
      auto check = oracle::check_brown_merges(ids_of(docs, c.vocab), c.vocab.size(), d.merges);
      EXPECT_TRUE(check.ok) << "trial " << trial << " exact=" << exact << ": " << check.message;
    }
  }
}

TEST(Brown, IncrementalMatchesExactRecomputation) {
  Rng rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    BigramCounts c = counts_of(random_docs(30, 200, rng));
    for (std::size_t window : {3u, 8u, 40u}) {
      Dendrogram fast = brown_cluster(c, {window, true, false});
      Dendrogram slow = brown_cluster(c, {window, true, true});
      ASSERT_EQ(fast.merges.size(), slow.merges.size());
      for (std::size_t t = 0; t < fast.merges.size(); ++t) {
        EXPECT_EQ(fast.merges[t].left, slow.merges[t].left) << "trial " << trial << " step " << t;
        EXPECT_EQ(fast.merges[t].right, slow.merges[t].right) << "trial " << trial << " step " << t;
        EXPECT_NEAR(fast.merges[t].ami_loss, slow.merges[t].ami_loss, 1e-9);
      }
    }
  }
}

TEST(Brown, WindowedLossesMatchAmiDrops) {
  // With a small window the recorded losses must still be the exact drop in
  // AMI of the whole vocabulary, and the drops accumulate to the initial AMI.
  Rng rng(4);
  Docs docs = random_docs(15, 120, rng);
  BigramCounts c = counts_of(docs);
  Dendrogram d = brown_cluster(c, {4, true, false});
  ASSERT_EQ(d.merges.size() + 1, c.vocab.size());
  const auto ids = ids_of(docs, c.vocab);
  std::vector<int> cluster(c.vocab.size());
  for (std::size_t w = 0; w < cluster.size(); ++w) cluster[w] = static_cast<int>(w);
  double current = oracle::ami(ids, cluster);
  EXPECT_NEAR(d.initial_ami, current, 1e-12);
  double total_loss = 0;
  for (std::size_t t = 0; t < d.merges.size(); ++t) {
    const int z = static_cast<int>(c.vocab.size() + t);
    for (int& k : cluster)
      if (k == static_cast<int>(d.merges[t].left) || k == static_cast<int>(d.merges[t].right)) k = z;
    const double after = oracle::ami(ids, cluster);
    EXPECT_NEAR(current - after, d.merges[t].ami_loss, 1e-9);
    EXPECT_GE(d.merges[t].ami_loss, 0.0);
    total_loss += d.merges[t].ami_loss;
    current = after;
  }
  EXPECT_NEAR(total_loss, d.initial_ami, 1e-9);
}

TEST(Brown, WindowAdmitsByFrequency) {
  // With window 2 the two most frequent words must form the first merge
  // candidates, so the first merge cannot involve the rarest word.
  Docs docs{{"a", "a", "a", "a", "b", "b", "b", "c"}, {"a", "b", "c", "d"}};
  BigramCounts c = counts_of(docs);
  Dendrogram d = brown_cluster(c, {2, true, false});
  const std::uint32_t rarest = static_cast<std::uint32_t>(c.vocab.index("d"));
  ASSERT_FALSE(d.merges.empty());
  EXPECT_NE(d.merges[0].left, rarest);
  EXPECT_NE(d.merges[0].right, rarest);
}

TEST(Brown, PartialTreeStopsAtWindow) {
  Rng rng(2);
  BigramCounts c = counts_of(random_docs(10, 50, rng));
  Dendrogram d = brown_cluster(c, {4, false, false});
  EXPECT_EQ(d.merges.size(), c.vocab.size() - 4);
  EXPECT_FALSE(d.full_tree());
  EXPECT_EQ(cut(d, 4).k(), 4u);
  EXPECT_THROW(cut(d, 3), BoundsError);
  const auto paths = d.paths();
  std::set<std::string> unique(paths.begin(), paths.end());
  EXPECT_EQ(unique.size(), paths.size());
}

TEST(Brown, Deterministic) {
  Rng rng(6);
  BigramCounts c = counts_of(random_docs(25, 150, rng));
  Dendrogram a = brown_cluster(c, {6, true, false});
  Dendrogram b = brown_cluster(c, {6, true, false});
  EXPECT_EQ(serialize_paths(a), serialize_paths(b));
  EXPECT_EQ(serialize_merges(a), serialize_merges(b));
}

TEST(Cut, ExtremesAndExactClusterCounts) {
  Rng rng(9);
  BigramCounts c = counts_of(random_docs(12, 60, rng));
  Dendrogram d = brown_cluster(c, {5, true, false});
  const std::size_t v = c.vocab.size();
  WordClustering all = cut(d, v);
  for (std::size_t i = 0; i < v; ++i) EXPECT_EQ(all.ids()[i], i);
  WordClustering one = cut(d, 1);
  for (auto id : one.ids()) EXPECT_EQ(id, 0u);
  for (std::size_t k = 1; k <= v; ++k) {
    WordClustering w = cut(d, k);
    EXPECT_EQ(w.k(), k);
    EXPECT_EQ(w.members().size(), k);
    for (const auto& m : w.members()) EXPECT_FALSE(m.empty());
    EXPECT_EQ(w.ids()[0], 0u);
    EXPECT_EQ(w.provenance().algorithm, ClusterAlgorithm::brown);
  }
  EXPECT_THROW(cut(d, 0), BoundsError);
  EXPECT_THROW(cut(d, v + 1), BoundsError);
}

TEST(Dendrogram, PathsArePrefixFree) {
  Rng rng(12);
  BigramCounts c = counts_of(random_docs(16, 80, rng));
  const auto paths = brown_cluster(c, {16, true, false}).paths();
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (std::size_t j = 0; j < paths.size(); ++j) {
      if (i != j) {
        EXPECT_FALSE(paths[j].starts_with(paths[i])) << paths[i] << " " << paths[j];
      }
    }
}

TEST(Dendrogram, SaveLoadRoundTrip) {
  testing_support::TempDir dir;
  Rng rng(13);
  BigramCounts c = counts_of(random_docs(14, 70, rng));
  for (bool full : {true, false}) {
    Dendrogram d = brown_cluster(c, {5, full, false});
    testing_support::write_text(dir.file("p.tsv"), serialize_paths(d));
    testing_support::write_text(dir.file("m.tsv"), serialize_merges(d));
    Dendrogram back = load_dendrogram(dir.file("p.tsv"), dir.file("m.tsv"));
    EXPECT_EQ(back.leaves, d.leaves);
    EXPECT_EQ(back.leaf_counts, d.leaf_counts);
    EXPECT_EQ(back.merges, d.merges);
    for (std::size_t k = d.leaves.size() - d.merges.size(); k <= d.leaves.size(); ++k)
      EXPECT_EQ(cut(back, k).ids(), cut(d, k).ids());
  }
}

TEST(Dendrogram, LoadRejectsInconsistentFiles) {
  testing_support::TempDir dir;
  Rng rng(14);
  Dendrogram d = brown_cluster(counts_of(random_docs(6, 30, rng)), {});
  testing_support::write_text(dir.file("p.tsv"), serialize_paths(d));
  testing_support::write_text(dir.file("bad_paths.tsv"), "0\tx\n");
  testing_support::write_text(dir.file("bad_merge.tsv"), "0\t0\t0.1\n");
  testing_support::write_text(dir.file("unknown.tsv"), "0\t99\t0.1\n");
  testing_support::write_text(dir.file("m.tsv"), serialize_merges(d));
  EXPECT_THROW(load_dendrogram(dir.file("p.tsv"), dir.file("bad_merge.tsv")), FormatError);
  EXPECT_THROW(load_dendrogram(dir.file("p.tsv"), dir.file("unknown.tsv")), FormatError);
  EXPECT_THROW(load_dendrogram(dir.file("bad_paths.tsv"), dir.file("m.tsv")), FormatError);
  EXPECT_THROW(load_dendrogram(dir.file("missing.tsv"), dir.file("m.tsv")), IoError);
}

#include <doctest.h>

#include "storylogic/content_unit.hpp"
#include "storylogic/esim.hpp"
#include "storylogic/logic_unit.hpp"
#include "storylogic/score_model.hpp"
#include "support.hpp"

#include <cmath>

using namespace storylogic;

namespace {

using Md = Matrix<double>;

double max_abs(const Md& a, const Md& b) { return (a - b).cwiseAbs().maxCoeff(); }

struct Camping {
  Vocabulary vocab;
  EncodedCloze encoded;
};

Camping camping() {
  const auto inst = testing::camping_instance();
  Camping c{testing::vocabulary_of({inst}), {}};
  c.encoded = encode(inst, c.vocab);
  return c;
}

}  // namespace

TEST_CASE("esim: pooled width and logic range") {
  ModelConfig config;
  NliModel<float> model(config, 20);
  model.initialize(1, nullptr);
  ad::Graph<float> g;
  const std::vector<int> p = {2, 3, 4, 5, 6};
  const std::vector<int> h = {7, 8, 9, 10, 11, 12, 13};
  const auto out = model.net().forward(g, p, h);
  CHECK(g.value(out.pooled).rows() == 3200);
  CHECK(g.value(out.pooled).cols() == 1);
  const auto& logic = g.value(out.logic);
  CHECK(logic.rows() == 400);
  CHECK(logic.cwiseAbs().maxCoeff() < 1.0f);
}

TEST_CASE("esim: identical sentences give symmetric energies") {
  ModelConfig config = testing::mini_config();
  NliModel<double> model(config, 20);
  testing::randomize(model.params(), 2);
  ad::Graph<double> g;
  const std::vector<int> s = {4, 7, 2, 9};
  const auto out = model.net().forward(g, s, s);
  const Md& e = g.value(out.energies);
  CHECK(max_abs(e, e.transpose()) < 1e-12);
  const Md& pooled = g.value(out.pooled);
  const Eigen::Index half = pooled.rows() / 2;
  CHECK(max_abs(pooled.topRows(half), pooled.bottomRows(half)) < 1e-12);
}

TEST_CASE("esim: alignment matches a double-loop oracle") {
  ModelConfig config = testing::mini_config();
  config.esim_hidden = 2;
  NliModel<double> model(config, 15);
  testing::randomize(model.params(), 3);
  ad::Graph<double> g;
  const std::vector<int> p = {3, 5, 7};
  const std::vector<int> h = {2, 4, 6, 8, 10};
  const auto out = model.net().forward(g, p, h);
  const Md& a = g.value(out.encoded_a);
  const Md& b = g.value(out.encoded_b);
  const Eigen::Index la = a.cols(), lb = b.cols();
  for (Eigen::Index i = 0; i < la; ++i) {
    std::vector<double> e(static_cast<std::size_t>(lb));
    double z = 0.0;
    for (Eigen::Index j = 0; j < lb; ++j) {
      double dot = 0.0;
      for (Eigen::Index k = 0; k < a.rows(); ++k) dot += a(k, i) * b(k, j);
      e[static_cast<std::size_t>(j)] = dot;
      CHECK(std::abs(g.value(out.energies)(i, j) - dot) < 1e-6);
      z += std::exp(dot);
    }
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
      double aligned = 0.0;
      for (Eigen::Index j = 0; j < lb; ++j) {
        aligned += std::exp(e[static_cast<std::size_t>(j)]) / z * b(k, j);
      }
      CHECK(std::abs(g.value(out.aligned_a)(k, i) - aligned) < 1e-6);
    }
  }
  for (Eigen::Index j = 0; j < lb; ++j) {
    double z = 0.0;
    for (Eigen::Index i = 0; i < la; ++i) z += std::exp(g.value(out.energies)(i, j));
    for (Eigen::Index k = 0; k < b.rows(); ++k) {
      double aligned = 0.0;
      for (Eigen::Index i = 0; i < la; ++i) {
        aligned += std::exp(g.value(out.energies)(i, j)) / z * a(k, i);
      }
      CHECK(std::abs(g.value(out.aligned_b)(k, j) - aligned) < 1e-6);
    }
  }
}

TEST_CASE("esim: padding does not change the output") {
  NliModel<double> model(testing::mini_config(), 20);
  testing::randomize(model.params(), 4);
  ad::Graph<double> g;
  const std::vector<int> p = {3, 5, 7}, h = {2, 4};
  const std::vector<int> pp = {3, 5, 7, 0, 0}, hp = {2, 4, 0, 0, 0, 0};
  const std::vector<std::uint8_t> pm = {1, 1, 1, 0, 0}, hm = {1, 1, 0, 0, 0, 0};
  const auto plain = model.net().forward(g, p, h);
  const auto padded = model.net().forward(g, pp, pm, hp, hm);
  CHECK(max_abs(g.value(plain.logits), g.value(padded.logits)) < 1e-12);
  CHECK(max_abs(g.value(plain.logic), g.value(padded.logic)) < 1e-12);
  CHECK(g.value(padded.align_a).rightCols(4).isZero(0));
}

TEST_CASE("esim: classifier probabilities") {
  NliModel<double> model(testing::mini_config(), 20);
  model.initialize(5, nullptr);
  const std::vector<int> p = {3, 5, 7}, h = {2, 4};
  const auto probs = model.classify(p, h);
  CHECK(std::abs(probs[0] + probs[1] + probs[2] - 1.0) < 1e-12);

  // classify == softmax(output layer(extract_logic)).
  ad::Graph<double> g;
  const ad::Var logic = model.net().extract_logic(g, p, h);
  const Md logits = g.value(dense(g, model.net().output_layer(), logic));
  const double z = logits.array().exp().sum();
  for (int k = 0; k < 3; ++k) CHECK(std::abs(std::exp(logits(k, 0)) / z - probs[k]) < 1e-12);

  model.params().at("esim.out.W").value.setZero();
  model.params().at("esim.out.b").value.setZero();
  for (double v : model.classify(p, h)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("content unit") {
  ParamStore<double> store;
  ContentNet<double> net(store, "cu", 20, 6, 3);
  testing::randomize(store, 6, 0.5);
  ad::Graph<double> g;

  const std::vector<int> one = {5};
  const auto words = net.encode_words(g, one);
  const Md one_state = g.value(words.states);
  const Md q1 = g.value(net.ending_query(g, one));
  CHECK(max_abs(q1, one_state) < 1e-15);
  const Md qa = g.value(net.ending_query(g, std::vector<int>{4, 9}));
  const Md qb = g.value(net.ending_query(g, std::vector<int>{4, 9}));
  CHECK(max_abs(qa, qb) == 0.0);

  const ad::Var q = net.ending_query(g, std::vector<int>{4, 9, 2});
  CHECK(g.value(q).rows() == 6);
  const auto single = net.sentence_vector(g, one, q);
  CHECK(max_abs(g.value(single.context), one_state) < 1e-15);

  // Masked overload equals the unpadded path.
  const std::vector<int> s = {3, 8, 11}, sp = {3, 8, 11, 0, 0};
  const std::vector<std::uint8_t> sm = {1, 1, 1, 0, 0};
  const auto plain = net.sentence_vector(g, s, q);
  const auto padded = net.sentence_vector(g, sp, sm, q);
  CHECK(max_abs(g.value(plain.context), g.value(padded.context)) < 1e-12);
  CHECK(g.value(padded.weights)(0, 3) == 0.0);

  const std::array<std::vector<int>, 4> plot = {{{2, 3}, {4, 5, 6}, {7}, {8, 9, 10, 11}}};
  const auto a = net.forward(g, plot, {12, 13});
  const auto b = net.forward(g, plot, {14, 15, 16});
  CHECK(g.value(a.content).rows() == 12);
  CHECK(max_abs(g.value(a.content), g.value(b.content)) > 1e-6);
  const std::array<std::vector<int>, 4> permuted = {plot[2], plot[0], plot[3], plot[1]};
  const auto c = net.forward(g, permuted, {12, 13});
  CHECK(max_abs(g.value(a.plot_final), g.value(c.plot_final)) > 1e-6);
}

TEST_CASE("content unit: full-size dimensions on the camping story") {
  const auto data = camping();
  StoryModel<float> model(ModelConfig{}, data.vocab.size());
  model.initialize(7, nullptr);
  ad::Graph<float> g;
  const auto right = model.content()->forward(g, data.encoded.plot, data.encoded.endings[0]);
  const auto wrong = model.content()->forward(g, data.encoded.plot, data.encoded.endings[1]);
  CHECK(g.value(right.query).rows() == 1024);
  CHECK(g.value(right.content).rows() == 2048);
  CHECK((g.value(right.content) - g.value(wrong.content)).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("logic unit: plot/ending pairing") {
  const auto inst = testing::camping_instance();
  const std::vector<Tokens> plot(inst.plot.begin(), inst.plot.end());
  const auto pairs = pair_plot_with_ending(plot, inst.endings[0]);
  CHECK(pairs.size() == 4);
  CHECK(pairs[0].first == tokenize("Daddy took us to the woods to camp."));
  CHECK(pairs[0].second == tokenize("We had a wonderful time camping."));
  const auto other = pair_plot_with_ending(inst.plot, inst.endings[1]);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(pairs[i].first == other[i].first);
    CHECK(pairs[i].second != other[i].second);
  }
  CHECK_THROWS_AS(pair_plot_with_ending(std::vector<Tokens>(3), inst.endings[0]),
                  MismatchError);
}

TEST_CASE("logic unit: ending and order sensitivity") {
  const auto data = camping();
  ModelConfig config = testing::mini_config(Mode::lu_only);
  StoryModel<double> model(config, data.vocab.size());
  testing::randomize(model.params(), 8, 0.5);

  ScoreTrace right, wrong;
  model.score_value(data.encoded.plot, data.encoded.endings[0], &right);
  model.score_value(data.encoded.plot, data.encoded.endings[1], &wrong);
  REQUIRE(right.logic_vectors.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK((right.logic_vectors[i] - wrong.logic_vectors[i]).cwiseAbs().maxCoeff() > 1e-9);
  }
  CHECK(right.logic_flow.size() == 8 * config.tracker_hidden);

  const std::array<std::size_t, 4> perm = {2, 0, 3, 1};
  std::array<std::vector<int>, 4> permuted;
  for (std::size_t i = 0; i < 4; ++i) permuted[i] = data.encoded.plot[perm[i]];
  ScoreTrace shuffled;
  model.score_value(permuted, data.encoded.endings[0], &shuffled);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(shuffled.logic_vectors[i] == right.logic_vectors[perm[i]]);
  }
}

TEST_CASE("score model: call counts by mode") {
  const auto data = camping();
  for (Mode mode : {Mode::full, Mode::cu_only, Mode::lu_only}) {
    CAPTURE(to_string(mode));
    StoryModel<float> model(testing::mini_config(mode), data.vocab.size());
    model.initialize(9, nullptr);
    ScoreTrace trace;
    const double s = model.score_value(data.encoded.plot, data.encoded.endings[0], &trace);
    CHECK(std::isfinite(s));
    CHECK(trace.score == s);
    CHECK(trace.extractor_calls == (mode == Mode::cu_only ? 0 : 4));
    CHECK(trace.content_calls == (mode == Mode::lu_only ? 0 : 1));
    CHECK(model.score_value(data.encoded.plot, data.encoded.endings[0]) == s);
  }
}

TEST_CASE("score model: zeroed output layer scores 0") {
  const auto data = camping();
  StoryModel<double> model(testing::mini_config(), data.vocab.size());
  testing::randomize(model.params(), 10);
  model.scorer()[1].w->value.setZero();
  model.scorer()[1].b->value.setZero();
  CHECK(model.score_value(data.encoded.plot, data.encoded.endings[0]) == 0.0);
  CHECK(model.score_value(data.encoded.plot, data.encoded.endings[1]) == 0.0);
  CHECK(model.predict(data.encoded) == 1);  // tie
}

TEST_CASE("score model: loss and prediction agree with scores") {
  const auto data = camping();
  StoryModel<double> model(testing::mini_config(), data.vocab.size());
  testing::randomize(model.params(), 11);
  const auto s = model.scores(data.encoded);
  ad::Graph<double> g;
  const double loss = g.scalar(model.instance_loss(g, data.encoded));
  const double pos = s[static_cast<std::size_t>(data.encoded.right_index - 1)];
  const double neg = s[static_cast<std::size_t>(2 - data.encoded.right_index)];
  CHECK(loss == doctest::Approx(hinge_loss(pos, neg, 1.0)).epsilon(1e-12));
  CHECK(model.predict(data.encoded) == choose_ending(s[0], s[1]));

  CHECK(choose_ending(0.9, 0.1) == 1);
  CHECK(choose_ending(0.1, 0.9) == 2);
  CHECK(choose_ending(0.5, 0.5) == 1);
}

TEST_CASE("score model: frozen extractor") {
  ModelConfig config = testing::mini_config();
  config.freeze_extractor = true;
  StoryModel<float> model(config, 20);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const auto& p = model.params()[i];
    CHECK(p.trainable == !p.name.starts_with("esim."));
  }
  CHECK_FALSE(model.params().find("esim.out.W"));
}

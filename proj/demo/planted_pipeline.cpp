// Generates a planted corpus, learns the network, and prints what came back.

#include <iostream>
#include <memory>

#include "tbn/tbn.hpp"

int main() {
  const auto corpus = tbn::generate_corpus(tbn::planted_spec(500, 42));
  const auto vocab = tbn::build_vocabulary(corpus);
  const auto parts = tbn::split_dialogues(corpus, 0.8, 42);
  const auto train = tbn::build_lagged(tbn::build_turn_matrix(parts.train, vocab), vocab);
  const auto test = tbn::build_lagged(tbn::build_turn_matrix(parts.test, vocab), vocab);

  const auto dag = tbn::learn_structure(train, tbn::build_tabu_mask(train.variable_names), {});
  std::cout << "edges:\n";
  for (const auto& e : dag.edges) {
    std::cout << "  " << dag.variable_names[e.source] << " -> " << dag.variable_names[e.target] << "  w=" << e.weight
              << '\n';
  }

  auto net = std::make_shared<const tbn::DiscreteBayesNet>(tbn::fit_cpds(dag, train, 1.0));
  const auto bn = tbn::rank_eval(tbn::make_tbn_predictor(net), test);
  const auto marginal = tbn::rank_eval(tbn::make_marginal_predictor(train), test);
  std::cout << "MRR temporal-bn " << bn.mrr << "  marginal " << marginal.mrr << "  (" << bn.pair_count
            << " held-out pairs)\n";

  const tbn::TrigramEmbedder embedder;
  const auto block = tbn::guide("i want to find a hotel", 0, 4, *net, vocab, embedder, {});
  std::cout << '\n' << block.text << '\n';
}

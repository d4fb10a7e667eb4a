#include "sagal/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sagal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent stream for model initialization and dropout.
std::uint64_t model_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x5A47ull); }

void check_budget(const DatasetContext& ctx, std::size_t initial,
                  std::size_t budget) {
  if (budget < initial)
    throw std::invalid_argument("budget " + std::to_string(budget) +
                                " is smaller than the initial seed set (" +
                                std::to_string(initial) + ")");
  if (budget > ctx.split.pool.size())
    throw std::invalid_argument("budget " + std::to_string(budget) +
                                " exceeds the pool size " +
                                std::to_string(ctx.split.pool.size()));
}

std::vector<NodeId> remaining_pool(const Split& split,
                                   std::span<const NodeId> labeled,
                                   std::size_t n) {
  std::vector<char> taken(n, 0);
  for (NodeId u : labeled) taken[u] = 1;
  std::vector<NodeId> out;
  out.reserve(split.pool.size());
  for (NodeId u : split.pool)
    if (!taken[u]) out.push_back(u);
  return out;
}

void erase_node(std::vector<NodeId>& pool, NodeId u) {
  auto it = std::lower_bound(pool.begin(), pool.end(), u);
  if (it == pool.end() || *it != u)
    throw std::logic_error("selected node missing from pool");
  pool.erase(it);
}

std::vector<TraceEntry> seed_trace(const Graph& g,
                                   std::span<const NodeId> seeds) {
  std::vector<TraceEntry> out;
  for (NodeId u : seeds) {
    TraceEntry e;
    e.iteration = 0;
    e.node = u;
    e.true_label = g.label(u);
    out.push_back(e);
  }
  return out;
}

}  // namespace

DatasetContext::DatasetContext(Dataset ds)
    : graph(std::move(ds.graph)),
      split(std::move(ds.split)),
      adj(normalize_adjacency(graph)),
      features(csr_from_dense_rows(graph.features(), graph.num_nodes(),
                                   graph.num_features())) {}

void SagConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda must be in [0, 1]");
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  retrain.validate();
}

SagPreprocessing::SagPreprocessing(const DatasetContext& ctx,
                                   const SagConfig& cfg)
    : started_(std::chrono::steady_clock::now()),
      op_(build_propagation(ctx.adj, cfg.k, cfg.epsilon)),
      features_(FeatureTable::build(ctx.graph, ctx.adj, cfg.metric.space, cfg.k)),
      index_(SemanticInfluence(op_, features_, cfg.effective_similarity()),
             cfg.theta) {
  seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           started_)
                 .count();
}

std::size_t Prototypes::count() const {
  return static_cast<std::size_t>(std::count_if(
      centers_.begin(), centers_.end(), [](const auto& c) { return !c.empty(); }));
}

void Prototypes::set(int c, std::vector<double> center) {
  if (center.size() != dim_)
    throw std::invalid_argument("prototype dimension mismatch");
  double sq = 0.0;
  for (double v : center) sq += v * v;
  sq_norms_[static_cast<std::size_t>(c)] = sq;
  centers_[static_cast<std::size_t>(c)] = std::move(center);
}

Prototypes update_prototypes(const FeatureTable& features,
                             std::span<const NodeId> labeled,
                             std::span<const int> labels,
                             std::size_t num_classes) {
  const std::size_t dim = features.cols();
  std::vector<std::vector<double>> sums(num_classes);
  std::vector<std::size_t> counts(num_classes, 0);
  for (NodeId u : labeled) {
    const auto c = static_cast<std::size_t>(labels[u]);
    if (sums[c].empty()) sums[c].assign(dim, 0.0);
    const auto row = features.row(u);
    for (NodeId j : features.support(u)) sums[c][j] += row[j];
    ++counts[c];
  }
  Prototypes out(num_classes, dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
    out.set(static_cast<int>(c), std::move(sums[c]));
  }
  return out;
}

double diversity_score(const Prototypes& prototypes,
                       const FeatureTable& features, NodeId u,
                       DiversityDistance distance) {
  if (prototypes.count() == 0) return 0.0;
  const auto x = features.row(u);
  const auto supp = features.support(u);
  const double xnorm = features.norm(u);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < prototypes.num_classes(); ++ci) {
    const int c = static_cast<int>(ci);
    if (!prototypes.has(c)) continue;
    const auto p = prototypes.center(c);
    double d;
    if (distance == DiversityDistance::euclidean) {
      // ‖x − p‖² = ‖p‖² + Σ_{j ∈ supp(x)} ((x_j − p_j)² − p_j²)
      double on_support = 0.0, p_on_support = 0.0;
      for (NodeId j : supp) {
        const double diff = x[j] - p[j];
        on_support += diff * diff;
        p_on_support += p[j] * p[j];
      }
      const double outside = prototypes.squared_norm(c) - p_on_support;
      d = std::sqrt(std::max(0.0, outside) + on_support);
    } else {
      double dot = 0.0;
      for (NodeId j : supp) dot += x[j] * p[j];
      const double pn = std::sqrt(prototypes.squared_norm(c));
      const double cos = (xnorm == 0.0 || pn == 0.0) ? 0.0 : dot / (xnorm * pn);
      d = 1.0 - cos;
    }
    best = std::min(best, d);
  }
  return best;
}

std::vector<double> percentiles(std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> out(n, 0.0);
  std::size_t first_equal = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && scores[order[i]] != scores[order[i - 1]]) first_equal = i;
    out[order[i]] = static_cast<double>(first_equal) / static_cast<double>(n);
  }
  return out;
}

double percentile(std::span<const double> scores, std::size_t index) {
  std::size_t smaller = 0;
  for (double s : scores)
    if (s < scores[index]) ++smaller;
  return static_cast<double>(smaller) / static_cast<double>(scores.size());
}

std::vector<NodeId> rank_by_score(std::span<const NodeId> nodes,
                                  std::span<const double> scores) {
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return nodes[a] < nodes[b];
  });
  std::vector<NodeId> out;
  out.reserve(nodes.size());
  for (std::size_t i : order) out.push_back(nodes[i]);
  return out;
}

std::vector<std::size_t> equal_class_budgets(std::size_t total,
                                             std::size_t num_classes) {
  if (num_classes == 0) return {};
  std::vector<std::size_t> out(num_classes, total / num_classes);
  for (std::size_t c = 0; c < total % num_classes; ++c) ++out[c];
  return out;
}

QueryDecision class_balanced_select(std::span<const NodeId> ranked,
                                    const DenseMatrix& probs,
                                    std::span<const std::size_t> counts,
                                    std::span<const std::size_t> budgets,
                                    bool balance) {
  if (ranked.empty()) throw std::invalid_argument("empty candidate pool");
  auto label_of = [&](NodeId u) {
    const auto row = probs.row(u);
    return pseudo_label({row.data(), static_cast<std::size_t>(row.size())});
  };
  if (balance) {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const int c = label_of(ranked[i]);
      const auto ci = static_cast<std::size_t>(c);
      if (ci < budgets.size() && counts[ci] < budgets[ci])
        return {ranked[i], i, c, false};
    }
  }
  return {ranked[0], 0, label_of(ranked[0]), balance};
}

std::vector<NodeId> initial_seed_set(const Graph& g, const Split& split,
                                     std::size_t per_class,
                                     std::mt19937_64& rng) {
  std::vector<std::vector<NodeId>> by_class(g.num_classes());
  for (NodeId u : split.pool)
    by_class[static_cast<std::size_t>(g.label(u))].push_back(u);
  std::vector<NodeId> out;
  for (auto& members : by_class) {
    const std::size_t take = std::min(per_class, members.size());
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, members.size() - 1);
      std::swap(members[i], members[pick(rng)]);
      out.push_back(members[i]);
    }
  }
  return out;
}

AcquisitionResult sag_acquire(const DatasetContext& ctx,
                              const SagPreprocessing& prep,
                              const SagConfig& cfg, std::size_t budget,
                              std::uint64_t seed, const std::vector<NodeId>* initial) {
  cfg.validate();
  const Graph& g = ctx.graph;
  const std::size_t n = g.num_nodes();
  const std::size_t num_classes = g.num_classes();
  const std::vector<int> labels = ctx.labels();
  const FeatureTable& features = prep.features();
  const ActivationIndex& index = prep.index();
  const double lambda = cfg.effective_lambda();

  AcquisitionState state;
  state.rng.seed(seed);
  if (initial) {
    std::vector<char> in_pool(n, 0);
    for (NodeId u : ctx.split.pool) in_pool[u] = 1;
    for (NodeId u : *initial) {
      if (u >= n || !in_pool[u])
        throw std::invalid_argument("initial set must be distinct pool nodes");
      in_pool[u] = 0;
    }
    state.labeled = *initial;
  } else {
    state.labeled = initial_seed_set(g, ctx.split, cfg.initial_per_class, state.rng);
  }
  state.initial_size = state.labeled.size();
  check_budget(ctx, state.initial_size, budget);
  state.per_class_counts.assign(num_classes, 0);
  state.activated = ActivatedSet(n);
  for (NodeId u : state.labeled) index.activate(u, state.activated);

  const std::vector<std::size_t> budgets =
      cfg.class_budgets.empty()
          ? equal_class_budgets(budget - state.initial_size, num_classes)
          : cfg.class_budgets;
  if (budgets.size() != num_classes)
    throw std::invalid_argument("class_budgets must have one entry per class");

  AcquisitionResult result;
  result.initial_size = state.initial_size;
  result.trace = seed_trace(g, state.labeled);

  std::vector<NodeId> pool = remaining_pool(ctx.split, state.labeled, n);
  GcnModel model(g.num_features(), num_classes, model_seed(seed));
  const GcnInputs inputs = ctx.gcn_inputs();

  std::vector<double> inf, dis, score;
  std::size_t iteration = 0;
  while (state.labeled.size() < budget) {
    ++iteration;
    model.train(inputs, state.labeled, labels, cfg.retrain);
    state.probs = model.forward(inputs, false);
    state.prototypes = update_prototypes(features, state.labeled, labels, num_classes);

    inf.resize(pool.size());
    dis.resize(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      inf[i] = static_cast<double>(index.marginal_gain(pool[i], state.activated));
      dis[i] = lambda > 0.0 ? diversity_score(state.prototypes, features, pool[i],
                                              cfg.diversity_distance)
                            : 0.0;
    }
    const std::vector<double> p_inf = percentiles(inf);
    const std::vector<double> p_dis = percentiles(dis);
    score.resize(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      score[i] = unified_score(lambda, p_inf[i], p_dis[i]);

    const std::vector<NodeId> ranked = rank_by_score(pool, score);
    const QueryDecision pick =
        class_balanced_select(ranked, state.probs, state.per_class_counts,
                              budgets, !cfg.no_class_balance);
    state.budget_exhausted |= pick.budget_exhausted;

    const auto pos = static_cast<std::size_t>(
        std::lower_bound(pool.begin(), pool.end(), pick.node) - pool.begin());
    TraceEntry e;
    e.iteration = iteration;
    e.node = pick.node;
    e.pseudo_label = pick.pseudo_label;
    e.true_label = labels[pick.node];
    e.inf_percentile = p_inf[pos];
    e.dis_percentile = p_dis[pos];
    e.score = score[pos];
    result.trace.push_back(e);

    state.labeled.push_back(pick.node);
    ++state.per_class_counts[static_cast<std::size_t>(pick.pseudo_label)];
    index.activate(pick.node, state.activated);
    erase_node(pool, pick.node);
  }
  result.labeled = std::move(state.labeled);
  result.budget_exhausted = state.budget_exhausted;
  return result;
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::random: return "random";
    case BaselineKind::degree: return "degree";
    case BaselineKind::entropy: return "entropy";
  }
  return "?";
}

AcquisitionResult baseline_select(BaselineKind kind, const DatasetContext& ctx,
                                  std::size_t budget, std::uint64_t seed,
                                  std::size_t initial_per_class,
                                  const TrainConfig& retrain) {
  const Graph& g = ctx.graph;
  const std::size_t n = g.num_nodes();
  std::mt19937_64 rng(seed);
  AcquisitionResult result;

  std::vector<NodeId> labeled;
  if (kind != BaselineKind::degree)
    labeled = initial_seed_set(g, ctx.split, initial_per_class, rng);
  result.initial_size = labeled.size();
  check_budget(ctx, labeled.size(), budget);
  result.trace = seed_trace(g, labeled);
  std::vector<NodeId> pool = remaining_pool(ctx.split, labeled, n);
  if (pool.empty() && labeled.size() < budget)
    throw std::invalid_argument("empty candidate pool");

  auto record = [&](std::size_t iteration, NodeId u, std::optional<int> pl,
                    std::optional<double> score) {
    TraceEntry e;
    e.iteration = iteration;
    e.node = u;
    e.pseudo_label = pl;
    e.true_label = g.label(u);
    e.score = score;
    result.trace.push_back(e);
    labeled.push_back(u);
  };

  switch (kind) {
    case BaselineKind::random: {
      for (std::size_t it = 1; labeled.size() < budget; ++it) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::size_t i = pick(rng);
        const NodeId u = pool[i];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
        record(it, u, std::nullopt, std::nullopt);
      }
      break;
    }
    case BaselineKind::degree: {
      std::vector<NodeId> order = pool;
      std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return g.degree(a) > g.degree(b);
      });
      for (std::size_t it = 1; labeled.size() < budget; ++it)
        record(it, order[it - 1], std::nullopt,
               static_cast<double>(g.degree(order[it - 1])));
      break;
    }
    case BaselineKind::entropy: {
      const std::vector<int> labels = ctx.labels();
      GcnModel model(g.num_features(), g.num_classes(), model_seed(seed));
      const GcnInputs inputs = ctx.gcn_inputs();
      for (std::size_t it = 1; labeled.size() < budget; ++it) {
        model.train(inputs, labeled, labels, retrain);
        const DenseMatrix probs = model.forward(inputs, false);
        std::size_t best = 0;
        double best_h = -1.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
          const auto row = probs.row(pool[i]);
          const double h = entropy({row.data(), static_cast<std::size_t>(row.size())});
          if (h > best_h) {
            best_h = h;
            best = i;
          }
        }
        const NodeId u = pool[best];
        const auto row = probs.row(u);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
        record(it, u, pseudo_label({row.data(), static_cast<std::size_t>(row.size())}),
               best_h);
      }
      break;
    }
  }
  result.labeled = std::move(labeled);
  return result;
}

}  // namespace sagal

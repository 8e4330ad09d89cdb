#include "gaitlab/learn.hpp"

#include "gaitlab/rng.hpp"
#include "gaitlab/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace gaitlab::learn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kLogEps = 1e-15;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double log_loss(std::span<const double> margins, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = std::clamp(sigmoid(margins[i]), kLogEps, 1.0 - kLogEps);
        total -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return total / static_cast<double>(y.size());
}

// --- CART ---------------------------------------------------------------

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
};

void sort_by_feature(const Matrix& x, std::vector<std::size_t>& rows, std::size_t f) {
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
}

// Cuts between distinct neighbours of rows already sorted on feature f; rows
// [0, cut) go left. Both sides keep at least min_leaf rows.
template <class Visit>
void for_each_cut(const Matrix& x, const std::vector<std::size_t>& rows, std::size_t f, std::size_t min_leaf,
                  Visit visit) {
    for (std::size_t cut = min_leaf; cut + min_leaf <= rows.size(); ++cut) {
        const double lo = x(rows[cut - 1], f);
        const double hi = x(rows[cut], f);
        if (lo == hi) continue;
        visit(cut, lo + (hi - lo) / 2.0);
    }
}

double gini(double ones, double n) {
    if (n <= 0.0) return 0.0;
    const double p = ones / n;
    return 2.0 * p * (1.0 - p);
}

struct GrowJob {
    std::vector<std::size_t> rows;
    int node = 0;
    int depth = 0;
};

Tree grow_gini_tree(const Matrix& x, std::span<const int> y, std::vector<std::size_t> sample, const ForestParams& p,
                    std::size_t mtry, Rng& rng) {
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<GrowJob> stack;
    stack.push_back({std::move(sample), 0, 0});
    std::vector<int> candidates(x.cols());
    const auto min_leaf = static_cast<std::size_t>(p.min_leaf);

    while (!stack.empty()) {
        GrowJob job = std::move(stack.back());
        stack.pop_back();
        const double n = static_cast<double>(job.rows.size());
        double ones = 0.0;
        for (std::size_t r : job.rows) ones += y[r];
        tree.nodes[job.node].value = ones / n;

        const double parent = gini(ones, n);
        if (job.depth >= p.max_depth || job.rows.size() < 2 * min_leaf || parent == 0.0) {
            continue;
        }
        std::iota(candidates.begin(), candidates.end(), 0);
        for (std::size_t i = 0; i < mtry; ++i) {
            std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
        }

        SplitChoice best;
        best.score = parent * n - 1e-12;
        for (std::size_t i = 0; i < mtry; ++i) {
            const int feature = candidates[i];
            std::vector<std::size_t> rows = job.rows;
            sort_by_feature(x, rows, static_cast<std::size_t>(feature));
            std::vector<double> prefix(rows.size() + 1, 0.0);
            for (std::size_t k = 0; k < rows.size(); ++k) prefix[k + 1] = prefix[k] + y[rows[k]];
            for_each_cut(x, rows, static_cast<std::size_t>(feature), min_leaf, [&](std::size_t cut, double threshold) {
                const double nl = static_cast<double>(cut);
                const double nr = n - nl;
                const double score = nl * gini(prefix[cut], nl) + nr * gini(ones - prefix[cut], nr);
                if (score < best.score) {
                    best = {feature, threshold, score};
                }
            });
        }
        if (best.feature < 0) {
            continue;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t r : job.rows) {
            (x(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
        }
        const int li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[job.node];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = li;
        node.right = li + 1;
        stack.push_back({std::move(right), li + 1, job.depth + 1});
        stack.push_back({std::move(left), li, job.depth + 1});
    }
    return tree;
}

// Newton step tree on gradients g and hessians h.
Tree grow_newton_tree(const Matrix& x, std::span<const double> g, std::span<const double> h, const BoostParams& p) {
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<GrowJob> stack;
    std::vector<std::size_t> all(g.size());
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({std::move(all), 0, 0});
    const double lambda = p.l2_leaf_lambda;

    while (!stack.empty()) {
        GrowJob job = std::move(stack.back());
        stack.pop_back();
        double gsum = 0.0;
        double hsum = 0.0;
        for (std::size_t r : job.rows) {
            gsum += g[r];
            hsum += h[r];
        }
        tree.nodes[job.node].value = -gsum / (hsum + lambda) * p.shrinkage;
        if (job.depth >= p.max_depth || job.rows.size() < 2) {
            continue;
        }
        const double parent = gsum * gsum / (hsum + lambda);
        SplitChoice best;
        best.score = 1e-12;  // minimum gain
        for (std::size_t f = 0; f < x.cols(); ++f) {
            std::vector<std::size_t> rows = job.rows;
            sort_by_feature(x, rows, f);
            std::vector<double> gl(rows.size() + 1, 0.0);
            std::vector<double> hl(rows.size() + 1, 0.0);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                gl[k + 1] = gl[k] + g[rows[k]];
                hl[k + 1] = hl[k] + h[rows[k]];
            }
            for_each_cut(x, rows, f, 1, [&](std::size_t cut, double threshold) {
                const double gr = gsum - gl[cut];
                const double hr = hsum - hl[cut];
                const double gain =
                    0.5 * (gl[cut] * gl[cut] / (hl[cut] + lambda) + gr * gr / (hr + lambda) - parent);
                if (gain > best.score) {
                    best = {static_cast<int>(f), threshold, gain};
                }
            });
        }
        if (best.feature < 0) {
            continue;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t r : job.rows) {
            (x(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
        }
        const int li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[job.node];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = li;
        node.right = li + 1;
        node.value = 0.0;
        stack.push_back({std::move(right), li + 1, job.depth + 1});
        stack.push_back({std::move(left), li, job.depth + 1});
    }
    return tree;
}

// --- fitting ------------------------------------------------------------

KnnState fit_knn(const KnnParams& p, const Matrix& x, std::span<const int> y) {
    if (static_cast<std::size_t>(p.k) > x.rows()) {
        throw Error(Errc::InvalidParams, "knn k=" + std::to_string(p.k) + " exceeds " + std::to_string(x.rows()) +
                                             " training rows");
    }
    return {x, std::vector<int>(y.begin(), y.end())};
}

LinearState fit_logistic(const LogisticParams& p, const Matrix& x, std::span<const int> y, FitTrace* trace) {
    LinearState s;
    s.w.assign(x.cols(), 0.0);
    for (int it = 0; it < p.max_iters; ++it) {
        const LossGradient lg = logistic_objective(x, y, s.w, s.b, p.l2_lambda);
        if (trace) trace->loss.push_back(lg.loss);
        double worst = std::abs(lg.grad_b);
        for (double g : lg.grad_w) worst = std::max(worst, std::abs(g));
        if (worst < p.tol) {
            break;
        }
        for (std::size_t j = 0; j < s.w.size(); ++j) s.w[j] -= p.learning_rate * lg.grad_w[j];
        s.b -= p.learning_rate * lg.grad_b;
    }
    return s;
}

// Pegasos: hinge loss + (lambda/2)|w|^2 with lambda = 1/C, step 1/(lambda t).
LinearState fit_svm(const SvmParams& p, const Matrix& x, std::span<const int> y) {
    LinearState s;
    s.w.assign(x.cols(), 0.0);
    const double lambda = 1.0 / p.c;
    Rng rng(p.seed);
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    double t = 0.0;
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (std::size_t i : order) {
            t += 1.0;
            const double eta = 1.0 / (lambda * t);
            const double sign = y[i] == 1 ? 1.0 : -1.0;
            const double margin = sign * (dot(s.w, x.row(i)) + s.b);
            const double shrink = 1.0 - eta * lambda;
            for (double& w : s.w) w *= shrink;
            if (margin < 1.0) {
                const auto row = x.row(i);
                for (std::size_t j = 0; j < s.w.size(); ++j) s.w[j] += eta * sign * row[j];
                s.b += eta * sign;
            }
        }
    }
    return s;
}

ForestState fit_forest(const ForestParams& p, const Matrix& x, std::span<const int> y) {
    const std::size_t mtry = p.features_per_split > 0
                                 ? std::min<std::size_t>(static_cast<std::size_t>(p.features_per_split), x.cols())
                                 : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));
    ForestState s;
    for (int t = 0; t < p.n_trees; ++t) {
        Rng rng(Rng::derive(p.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> sample(x.rows());
        for (auto& r : sample) r = rng.below(x.rows());
        s.trees.push_back(grow_gini_tree(x, y, std::move(sample), p, std::max<std::size_t>(1, mtry), rng));
    }
    return s;
}

BoostState fit_boost(const BoostParams& p, const Matrix& x, std::span<const int> y, FitTrace* trace) {
    BoostState s;
    const double prior = std::clamp(std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size()), 1e-6,
                                    1.0 - 1e-6);
    s.base_margin = std::log(prior / (1.0 - prior));
    std::vector<double> margin(y.size(), s.base_margin);
    std::vector<double> g(y.size());
    std::vector<double> h(y.size());
    if (trace) trace->loss.push_back(log_loss(margin, y));
    for (int round = 0; round < p.n_rounds; ++round) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double prob = sigmoid(margin[i]);
            g[i] = prob - y[i];
            h[i] = std::max(prob * (1.0 - prob), 1e-16);
        }
        Tree tree = grow_newton_tree(x, g, h, p);
        for (std::size_t i = 0; i < y.size(); ++i) margin[i] += tree.evaluate(x.row(i));
        s.trees.push_back(std::move(tree));
        if (trace) trace->loss.push_back(log_loss(margin, y));
    }
    return s;
}

std::string num(double v) { return text::format_exact(v); }

} // namespace

std::string_view to_string(Kind k) {
    switch (k) {
    case Kind::Knn: return "knn";
    case Kind::Logistic: return "logistic";
    case Kind::LinearSvm: return "svm";
    case Kind::RandomForest: return "forest";
    case Kind::BoostedTrees: return "boost";
    }
    return "unknown";
}

std::string_view to_string(Metric m) { return m == Metric::Euclidean ? "euclidean" : "manhattan"; }
std::string_view to_string(Weighting w) { return w == Weighting::Uniform ? "uniform" : "inverse_distance"; }

std::vector<std::pair<std::string, std::string>> ModelSpec::to_pairs() const {
    std::vector<std::pair<std::string, std::string>> out{{"kind", std::string(to_string(kind()))}};
    std::visit(overloaded{
                   [&](const KnnParams& p) {
                       out.insert(out.end(), {{"k", std::to_string(p.k)},
                                              {"metric", std::string(to_string(p.metric))},
                                              {"weighting", std::string(to_string(p.weighting))}});
                   },
                   [&](const LogisticParams& p) {
                       out.insert(out.end(), {{"learning_rate", num(p.learning_rate)},
                                              {"l2_lambda", num(p.l2_lambda)},
                                              {"max_iters", std::to_string(p.max_iters)},
                                              {"tol", num(p.tol)}});
                   },
                   [&](const SvmParams& p) {
                       out.insert(out.end(), {{"c", num(p.c)},
                                              {"epochs", std::to_string(p.epochs)},
                                              {"seed", std::to_string(p.seed)}});
                   },
                   [&](const ForestParams& p) {
                       out.insert(out.end(), {{"n_trees", std::to_string(p.n_trees)},
                                              {"max_depth", std::to_string(p.max_depth)},
                                              {"min_leaf", std::to_string(p.min_leaf)},
                                              {"features_per_split", std::to_string(p.features_per_split)},
                                              {"seed", std::to_string(p.seed)}});
                   },
                   [&](const BoostParams& p) {
                       out.insert(out.end(), {{"n_rounds", std::to_string(p.n_rounds)},
                                              {"max_depth", std::to_string(p.max_depth)},
                                              {"shrinkage", num(p.shrinkage)},
                                              {"l2_leaf_lambda", num(p.l2_leaf_lambda)}});
                   },
               },
               params);
    return out;
}

std::string ModelSpec::describe() const {
    std::string out;
    for (const auto& [k, v] : to_pairs()) {
        if (!out.empty()) out += ',';
        out += k + "=" + v;
    }
    return out;
}

ModelSpec ModelSpec::parse(std::string_view body) {
    std::map<std::string, std::string> kv;
    std::string normalized(body);
    std::replace(normalized.begin(), normalized.end(), '\n', ',');
    for (const auto& item : text::split(normalized, ',')) {
        const auto field = text::trim(item);
        if (field.empty()) continue;
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::SchemaMismatch, "model spec item '" + std::string(field) + "' is not key=value");
        }
        kv[std::string(text::trim(field.substr(0, eq)))] = std::string(text::trim(field.substr(eq + 1)));
    }
    const std::string kind = kv.count("kind") ? kv["kind"] : "knn";
    kv.erase("kind");

    auto take_int = [&](const char* key, auto& target) {
        if (auto it = kv.find(key); it != kv.end()) {
            const auto v = text::parse_int(it->second);
            if (!v) throw Error(Errc::SchemaMismatch, std::string("model spec '") + key + "' expects an integer");
            target = static_cast<std::remove_reference_t<decltype(target)>>(*v);
            kv.erase(it);
        }
    };
    auto take_num = [&](const char* key, double& target) {
        if (auto it = kv.find(key); it != kv.end()) {
            const auto v = text::parse_double(it->second);
            if (!v || !std::isfinite(*v)) {
                throw Error(Errc::SchemaMismatch, std::string("model spec '") + key + "' expects a number");
            }
            target = *v;
            kv.erase(it);
        }
    };

    ModelSpec spec;
    if (kind == "knn") {
        KnnParams p;
        take_int("k", p.k);
        if (auto it = kv.find("metric"); it != kv.end()) {
            if (it->second == "euclidean") p.metric = Metric::Euclidean;
            else if (it->second == "manhattan") p.metric = Metric::Manhattan;
            else throw Error(Errc::SchemaMismatch, "unknown metric '" + it->second + "'");
            kv.erase(it);
        }
        if (auto it = kv.find("weighting"); it != kv.end()) {
            if (it->second == "uniform") p.weighting = Weighting::Uniform;
            else if (it->second == "inverse_distance") p.weighting = Weighting::InverseDistance;
            else throw Error(Errc::SchemaMismatch, "unknown weighting '" + it->second + "'");
            kv.erase(it);
        }
        spec.params = p;
    } else if (kind == "logistic") {
        LogisticParams p;
        take_num("learning_rate", p.learning_rate);
        take_num("l2_lambda", p.l2_lambda);
        take_int("max_iters", p.max_iters);
        take_num("tol", p.tol);
        spec.params = p;
    } else if (kind == "svm") {
        SvmParams p;
        take_num("c", p.c);
        take_int("epochs", p.epochs);
        take_int("seed", p.seed);
        spec.params = p;
    } else if (kind == "forest") {
        ForestParams p;
        take_int("n_trees", p.n_trees);
        take_int("max_depth", p.max_depth);
        take_int("min_leaf", p.min_leaf);
        take_int("features_per_split", p.features_per_split);
        take_int("seed", p.seed);
        spec.params = p;
    } else if (kind == "boost") {
        BoostParams p;
        take_int("n_rounds", p.n_rounds);
        take_int("max_depth", p.max_depth);
        take_num("shrinkage", p.shrinkage);
        take_num("l2_leaf_lambda", p.l2_leaf_lambda);
        spec.params = p;
    } else {
        throw Error(Errc::SchemaMismatch, "unknown model kind '" + kind + "'");
    }
    if (!kv.empty()) {
        throw Error::schema(kv.begin()->first);
    }
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(Errc::InvalidParams, what);
    };
    std::visit(overloaded{
                   [&](const KnnParams& p) { require(p.k >= 1 && p.k % 2 == 1, "knn k must be odd and >= 1"); },
                   [&](const LogisticParams& p) {
                       require(p.learning_rate > 0.0, "learning_rate must be positive");
                       require(p.l2_lambda >= 0.0, "l2_lambda must be non-negative");
                       require(p.max_iters >= 1, "max_iters must be positive");
                       require(p.tol > 0.0, "tol must be positive");
                   },
                   [&](const SvmParams& p) {
                       require(p.c > 0.0, "svm c must be positive");
                       require(p.epochs >= 1, "svm epochs must be positive");
                   },
                   [&](const ForestParams& p) {
                       require(p.n_trees >= 1, "n_trees must be positive");
                       require(p.max_depth >= 1, "max_depth must be positive");
                       require(p.min_leaf >= 1, "min_leaf must be positive");
                       require(p.features_per_split >= 0, "features_per_split must be non-negative");
                   },
                   [&](const BoostParams& p) {
                       require(p.n_rounds >= 1, "n_rounds must be positive");
                       require(p.max_depth >= 1, "max_depth must be positive");
                       require(p.shrinkage > 0.0, "shrinkage must be positive");
                       require(p.l2_leaf_lambda >= 0.0, "l2_leaf_lambda must be non-negative");
                   },
               },
               params);
}

double Tree::evaluate(std::span<const double> row) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const TreeNode& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

LossGradient logistic_objective(const Matrix& x, std::span<const int> y, std::span<const double> w, double b,
                                double lambda) {
    LossGradient out;
    out.grad_w.assign(w.size(), 0.0);
    const double n = static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        const double z = dot(w, row) + b;
        // log(1 + e^z) - y z, computed without overflow
        out.loss += (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y[i] * z;
        const double r = sigmoid(z) - y[i];
        for (std::size_t j = 0; j < w.size(); ++j) out.grad_w[j] += r * row[j];
        out.grad_b += r;
    }
    out.loss /= n;
    out.grad_b /= n;
    double norm = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        out.grad_w[j] = out.grad_w[j] / n + lambda * w[j];
        norm += w[j] * w[j];
    }
    out.loss += 0.5 * lambda * norm;
    return out;
}

double distance(Metric m, std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    if (m == Metric::Euclidean) {
        for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(acc);
    }
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

std::vector<Neighbor> nearest(const KnnState& s, Metric m, std::span<const double> query, std::size_t k) {
    std::vector<Neighbor> all(s.x.rows());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = {distance(m, s.x.row(i), query), i};
    }
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                          return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
                      });
    all.resize(k);
    return all;
}

Prediction knn_vote(const KnnState& s, const KnnParams& p, std::span<const Neighbor> neighbors) {
    ensure(!neighbors.empty(), "knn vote needs at least one neighbour");
    std::array<double, 2> weight{0.0, 0.0};
    const bool exact_match = p.weighting == Weighting::InverseDistance && neighbors.front().distance == 0.0;
    for (const auto& nb : neighbors) {
        double w = 1.0;
        if (p.weighting == Weighting::InverseDistance) {
            if (exact_match) {
                w = nb.distance == 0.0 ? 1.0 : 0.0;
            } else {
                w = 1.0 / nb.distance;
            }
        }
        weight[static_cast<std::size_t>(s.y[nb.index])] += w;
    }
    Prediction out;
    out.score = weight[1] / (weight[0] + weight[1]);
    if (weight[1] > weight[0]) {
        out.label = 1;
    } else if (weight[0] > weight[1]) {
        out.label = 0;
    } else {
        out.label = s.y[neighbors.front().index];
    }
    return out;
}

Classifier train_classifier(const ModelSpec& spec, const Matrix& x, std::span<const int> y, FitTrace* trace) {
    spec.validate();
    if (y.size() != x.rows()) {
        throw Error(Errc::DimensionMismatch, "label count does not match training rows");
    }
    std::array<std::size_t, 2> counts{0, 0};
    for (int label : y) {
        if (label != 0 && label != 1) throw Error(Errc::InvalidParams, "labels must be 0 or 1");
        ++counts[static_cast<std::size_t>(label)];
    }
    if (counts[0] == 0 || counts[1] == 0) {
        throw Error(Errc::SingleClass, "training set holds a single class");
    }
    Classifier c;
    c.spec = spec;
    c.dims = x.cols();
    c.state = std::visit(overloaded{
                             [&](const KnnParams& p) -> FittedState { return fit_knn(p, x, y); },
                             [&](const LogisticParams& p) -> FittedState { return fit_logistic(p, x, y, trace); },
                             [&](const SvmParams& p) -> FittedState { return fit_svm(p, x, y); },
                             [&](const ForestParams& p) -> FittedState { return fit_forest(p, x, y); },
                             [&](const BoostParams& p) -> FittedState { return fit_boost(p, x, y, trace); },
                         },
                         spec.params);
    return c;
}

Prediction classify(const Classifier& c, std::span<const double> row) {
    if (row.size() != c.dims) {
        throw Error(Errc::DimensionMismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                                 std::to_string(c.dims));
    }
    auto from_margin = [](double margin) { return Prediction{margin > 0.0 ? 1 : 0, sigmoid(margin)}; };
    switch (c.spec.kind()) {
    case Kind::Knn: {
        const auto& p = std::get<KnnParams>(c.spec.params);
        const auto& s = std::get<KnnState>(c.state);
        const auto nb = nearest(s, p.metric, row, static_cast<std::size_t>(p.k));
        return knn_vote(s, p, nb);
    }
    case Kind::Logistic:
    case Kind::LinearSvm: {
        const auto& s = std::get<LinearState>(c.state);
        return from_margin(dot(s.w, row) + s.b);
    }
    case Kind::RandomForest: {
        const auto& s = std::get<ForestState>(c.state);
        double votes = 0.0;
        for (const auto& t : s.trees) votes += t.evaluate(row) > 0.5 ? 1.0 : 0.0;
        const double score = votes / static_cast<double>(s.trees.size());
        return {score > 0.5 ? 1 : 0, score};
    }
    case Kind::BoostedTrees: {
        const auto& s = std::get<BoostState>(c.state);
        double margin = s.base_margin;
        for (const auto& t : s.trees) margin += t.evaluate(row);
        return from_margin(margin);
    }
    }
    throw Error(Errc::Invariant, "unknown model kind");
}

Model fit(const ModelSpec& spec, const Dataset& train, std::span<const std::string> features, FitTrace* trace) {
    if (!train.labeled()) {
        throw Error(Errc::Unlabeled, "training needs a labeled table");
    }
    const Dataset selected = features.empty() ? train : train.select_columns(features);
    auto [scaled, scaler] = dataset::standardize(selected);
    Model m;
    m.spec = spec;
    m.features = selected.feature_names;
    m.scaler = std::move(scaler);
    m.classifier = train_classifier(spec, scaled.x, *scaled.y, trace);
    return m;
}

Prediction predict(const Model& m, std::span<const double> raw_row) {
    if (raw_row.size() != m.features.size()) {
        throw Error(Errc::DimensionMismatch, "row has " + std::to_string(raw_row.size()) + " features, model expects " +
                                                 std::to_string(m.features.size()));
    }
    std::vector<double> row(raw_row.begin(), raw_row.end());
    dataset::apply_scaler_row(m.scaler, row);
    return classify(m.classifier, row);
}

std::vector<Prediction> predict(const Model& m, const Dataset& ds) {
    Dataset selected;
    try {
        selected = ds.select_columns(m.features);
    } catch (const Error& e) {
        if (e.code() != Errc::SchemaMismatch) throw;
        throw Error(Errc::DimensionMismatch, "table lacks model feature '" + e.detail() + "'");
    }
    std::vector<Prediction> out;
    out.reserve(selected.rows());
    for (std::size_t r = 0; r < selected.rows(); ++r) {
        out.push_back(predict(m, selected.x.row(r)));
    }
    return out;
}

} // namespace gaitlab::learn

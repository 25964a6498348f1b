#include "sliceprop/mforest.hpp"

#include <algorithm>
#include <cmath>

#include "sliceprop/errors.hpp"

namespace sliceprop {

namespace {

constexpr int kDim = FeatureMatrix::kDim;

double box_rate(const MondrianNode& n) {
    double r = 0.0;
    for (int d = 0; d < kDim; ++d) r += n.box_high[d] - n.box_low[d];
    return r;
}

double box_distance(const MondrianNode& n, const std::array<double, 3>& x) {
    double eta = 0.0;
    for (int d = 0; d < kDim; ++d)
        eta += std::max(x[d] - n.box_high[d], 0.0) + std::max(n.box_low[d] - x[d], 0.0);
    return eta;
}

int widest_dim(const MondrianNode& n) {
    int best = 0;
    for (int d = 1; d < kDim; ++d)
        if (n.box_high[d] - n.box_low[d] > n.box_high[best] - n.box_low[best])
            best = d;
    return best;
}

struct TreeGrower {
    MondrianForestModel& model;
    MondrianTree& tree;

    bool paused(const MondrianNode& n, std::size_t n_rows) const {
        const bool pure = n.class_counts[0] == 0 || n.class_counts[1] == 0;
        return pure ||
               n_rows < 2 * static_cast<std::size_t>(model.params.min_samples_leaf);
    }

    /// Builds a (sub)tree over the given points; returns its root index.
    int grow(std::vector<std::uint32_t> rows, double parent_tau) {
        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        {
            MondrianNode& n = tree.nodes[idx];
            n.box_low.fill(std::numeric_limits<double>::infinity());
            n.box_high.fill(-std::numeric_limits<double>::infinity());
            for (std::uint32_t i : rows) {
                const LabeledPoint& p = model.points[i];
                n.class_counts[p.label]++;
                for (int d = 0; d < kDim; ++d) {
                    n.box_low[d] = std::min(n.box_low[d], p.features[d]);
                    n.box_high[d] = std::max(n.box_high[d], p.features[d]);
                }
            }
        }

        const double rate = box_rate(tree.nodes[idx]);
        if (!paused(tree.nodes[idx], rows.size()) && rate > 0.0) {
            const double tau = parent_tau + tree.rng.exponential(rate);
            if (tau > parent_tau && tau < model.params.lifetime) {
                split(idx, std::move(rows), tau, rate);
                return idx;
            }
        }
        MondrianNode& n = tree.nodes[idx];
        n.split_time = model.params.lifetime;
        n.leaf_rows = std::move(rows);
        return idx;
    }

    void split(int idx, std::vector<std::uint32_t> rows, double tau, double rate) {
        // Dimension sampled proportional to box side lengths,
        // location uniform strictly inside that side.
        int dim = -1;
        {
            const double u = tree.rng.uniform01() * rate;
            double cum = 0.0;
            for (int d = 0; d < kDim; ++d) {
                const double side =
                    tree.nodes[idx].box_high[d] - tree.nodes[idx].box_low[d];
                cum += side;
                if (u < cum && side > 0.0) {
                    dim = d;
                    break;
                }
            }
            if (dim < 0) dim = widest_dim(tree.nodes[idx]);
        }
        const double loc = tree.rng.uniform_open(tree.nodes[idx].box_low[dim],
                                                 tree.nodes[idx].box_high[dim]);
        std::vector<std::uint32_t> left, right;
        for (std::uint32_t i : rows) {
            if (model.points[i].features[dim] <= loc)
                left.push_back(i);
            else
                right.push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();
        if (left.empty() || right.empty()) {
            // Degenerate box too narrow to separate; pause instead.
            MondrianNode& n = tree.nodes[idx];
            n.split_time = model.params.lifetime;
            left.insert(left.end(), right.begin(), right.end());
            n.leaf_rows = std::move(left);
            return;
        }
        tree.nodes[idx].split_time = tau;
        tree.nodes[idx].split_dim = dim;
        tree.nodes[idx].split_loc = loc;
        const int l = grow(std::move(left), tau);
        const int r = grow(std::move(right), tau);
        tree.nodes[idx].left = l;
        tree.nodes[idx].right = r;
    }

    /// Extends the subtree rooted at j with point pi; returns the index of
    /// the node now occupying j's position (a new parent may be inserted).
    int extend(int j, std::uint32_t pi, double parent_tau) {
        const LabeledPoint& p = model.points[pi];
        const double eta = box_distance(tree.nodes[j], p.features);
        if (eta > 0.0) {
            const double t_new = parent_tau + tree.rng.exponential(eta);
            if (t_new > parent_tau && t_new < tree.nodes[j].split_time)
                return branch_above(j, pi, t_new);
        }
        MondrianNode& n = tree.nodes[j];
        for (int d = 0; d < kDim; ++d) {
            n.box_low[d] = std::min(n.box_low[d], p.features[d]);
            n.box_high[d] = std::max(n.box_high[d], p.features[d]);
        }
        n.class_counts[p.label]++;
        if (n.is_leaf()) {
            n.leaf_rows.push_back(pi);
            return maybe_resume(j, parent_tau);
        }
        const int dim = n.split_dim;
        const bool go_left = p.features[dim] <= n.split_loc;
        const int child = go_left ? n.left : n.right;
        const int new_child = extend(child, pi, n.split_time);
        MondrianNode& n2 = tree.nodes[j];  // extend() may reallocate nodes
        (go_left ? n2.left : n2.right) = new_child;
        return j;
    }

    int branch_above(int j, std::uint32_t pi, double t_new) {
        const LabeledPoint& p = model.points[pi];
        // Sample the split dimension proportional to the per-dim overshoot.
        std::array<double, 3> excess{};
        double eta = 0.0;
        for (int d = 0; d < kDim; ++d) {
            excess[d] = std::max(p.features[d] - tree.nodes[j].box_high[d], 0.0) +
                        std::max(tree.nodes[j].box_low[d] - p.features[d], 0.0);
            eta += excess[d];
        }
        int dim = -1;
        {
            const double u = tree.rng.uniform01() * eta;
            double cum = 0.0;
            for (int d = 0; d < kDim; ++d) {
                cum += excess[d];
                if (u < cum && excess[d] > 0.0) {
                    dim = d;
                    break;
                }
            }
            if (dim < 0)
                dim = static_cast<int>(std::max_element(excess.begin(), excess.end()) -
                                       excess.begin());
        }
        const bool above = p.features[dim] > tree.nodes[j].box_high[dim];
        const double loc =
            above ? tree.rng.uniform_open(tree.nodes[j].box_high[dim], p.features[dim])
                  : tree.rng.uniform_open(p.features[dim], tree.nodes[j].box_low[dim]);

        const int parent = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int leaf = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        MondrianNode& np = tree.nodes[parent];
        const MondrianNode& old = tree.nodes[j];
        np.split_time = t_new;
        np.split_dim = dim;
        np.split_loc = loc;
        for (int d = 0; d < kDim; ++d) {
            np.box_low[d] = std::min(old.box_low[d], p.features[d]);
            np.box_high[d] = std::max(old.box_high[d], p.features[d]);
        }
        np.class_counts = old.class_counts;
        np.class_counts[p.label]++;
        np.left = above ? j : leaf;
        np.right = above ? leaf : j;

        MondrianNode& nl = tree.nodes[leaf];
        nl.split_time = model.params.lifetime;
        nl.box_low = p.features;
        nl.box_high = p.features;
        nl.class_counts[p.label] = 1;
        nl.leaf_rows.push_back(pi);
        return parent;
    }

    int maybe_resume(int j, double parent_tau) {
        MondrianNode& n = tree.nodes[j];
        if (paused(n, n.leaf_rows.size()) || box_rate(n) <= 0.0) return j;
        std::vector<std::uint32_t> rows = std::move(n.leaf_rows);
        n.leaf_rows.clear();
        // Regrow in place of the paused leaf; the old slot goes unused.
        return grow(std::move(rows), parent_tau);
    }
};

void check_fit_input(const FeatureMatrix& data, const MFParams& params) {
    if (data.rows.empty()) throw InvalidInput("mf_fit: empty training data");
    if (!data.fully_labeled()) throw InvalidInput("mf_fit: unlabeled rows");
    if (params.n_trees < 1) throw InvalidInput("mf_fit: n_trees must be >= 1");
    if (!(params.lifetime > 0.0)) throw InvalidInput("mf_fit: lifetime must be > 0");
    if (!(params.smoothing_alpha > 0.0))
        throw InvalidInput("mf_fit: smoothing_alpha must be > 0");
    if (params.min_samples_leaf < 1)
        throw InvalidInput("mf_fit: min_samples_leaf must be >= 1");
}

std::array<double, 2> predict_tree(const MondrianForestModel& model,
                                   const MondrianTree& tree,
                                   const std::array<double, 3>& x) {
    const double alpha = model.params.smoothing_alpha;
    std::array<double, 2> result{0.0, 0.0};
    std::array<double, 2> parent_post{0.5, 0.5};
    double parent_tau = 0.0;
    double w = 1.0;
    int j = tree.root;
    for (;;) {
        const MondrianNode& n = tree.nodes[j];
        const double eta = box_distance(n, x);
        double p = 0.0;
        if (eta > 0.0) {
            const double delta = n.split_time - parent_tau;
            p = std::isinf(delta) ? 1.0 : -std::expm1(-delta * eta);
        }
        const double total = n.class_counts[0] + n.class_counts[1];
        std::array<double, 2> post;
        for (int c = 0; c < 2; ++c)
            post[c] = (n.class_counts[c] + alpha * parent_post[c]) / (total + alpha);

        result[0] += w * p * post[0];
        result[1] += w * p * post[1];
        if (n.is_leaf()) {
            result[0] += w * (1.0 - p) * post[0];
            result[1] += w * (1.0 - p) * post[1];
            return result;
        }
        w *= 1.0 - p;
        parent_post = post;
        parent_tau = n.split_time;
        j = x[n.split_dim] <= n.split_loc ? n.left : n.right;
    }
}

}  // namespace

MondrianForestModel mf_fit(const FeatureMatrix& data, const MFParams& params) {
    check_fit_input(data, params);
    MondrianForestModel model;
    model.params = params;
    model.points.reserve(data.rows.size());
    for (const PixelSample& r : data.rows)
        model.points.push_back(LabeledPoint{r.features, *r.label});

    model.trees.resize(params.n_trees);
    for (int t = 0; t < params.n_trees; ++t) {
        MondrianTree& tree = model.trees[t];
        tree.rng = Rng(mix64(params.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> rows(model.points.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            rows[i] = static_cast<std::uint32_t>(i);
        tree.root = TreeGrower{model, tree}.grow(std::move(rows), 0.0);
    }
    return model;
}

void mf_extend(MondrianForestModel& model, const FeatureMatrix& data) {
    if (!data.fully_labeled()) throw InvalidInput("mf_extend: unlabeled rows");
    if (model.trees.empty()) throw InvalidInput("mf_extend: model has no trees");
    for (const PixelSample& r : data.rows) {
        const std::uint32_t pi = static_cast<std::uint32_t>(model.points.size());
        model.points.push_back(LabeledPoint{r.features, *r.label});
        for (MondrianTree& tree : model.trees)
            tree.root = TreeGrower{model, tree}.extend(tree.root, pi, 0.0);
    }
}

std::vector<std::array<double, 2>> mf_predict_class_proba(
    const MondrianForestModel& model, const FeatureMatrix& features) {
    std::vector<std::array<double, 2>> out(features.size(), {0.0, 0.0});
    for (const MondrianTree& tree : model.trees) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            const auto p = predict_tree(model, tree, features.rows[i].features);
            out[i][0] += p[0];
            out[i][1] += p[1];
        }
    }
    const double n_trees = static_cast<double>(model.trees.size());
    for (auto& p : out) {
        p[0] /= n_trees;
        p[1] /= n_trees;
    }
    return out;
}

std::vector<double> mf_predict_proba(const MondrianForestModel& model,
                                     const FeatureMatrix& features) {
    std::vector<double> out(features.size(), 0.0);
    for (const MondrianTree& tree : model.trees)
        for (std::size_t i = 0; i < features.size(); ++i)
            out[i] += predict_tree(model, tree, features.rows[i].features)[1];
    const double n_trees = static_cast<double>(model.trees.size());
    for (double& p : out) p = std::clamp(p / n_trees, 0.0, 1.0);
    return out;
}

namespace {

struct AuditContext {
    const MondrianForestModel& model;
    const MondrianTree& tree;
    int tree_index;

    std::optional<std::string> fail(int node, const std::string& what) const {
        return "tree " + std::to_string(tree_index) + " node " +
               std::to_string(node) + ": " + what;
    }

    std::optional<std::string> walk(int j, double parent_tau,
                                    std::vector<int>& path) const {
        const MondrianNode& n = tree.nodes[j];
        if (!(n.split_time > parent_tau))
            return fail(j, "split time not strictly increasing");
        for (int d = 0; d < kDim; ++d)
            if (n.box_low[d] > n.box_high[d]) return fail(j, "inverted box");

        path.push_back(j);
        std::optional<std::string> err;
        if (n.is_leaf()) {
            std::array<std::uint32_t, 2> hist{0, 0};
            for (std::uint32_t i : n.leaf_rows) {
                const LabeledPoint& p = model.points[i];
                hist[p.label]++;
                // The point must lie inside every box on its path and on
                // the correct side of every ancestor split.
                for (std::size_t a = 0; a < path.size(); ++a) {
                    const MondrianNode& anc = tree.nodes[path[a]];
                    for (int d = 0; d < kDim; ++d)
                        if (p.features[d] < anc.box_low[d] ||
                            p.features[d] > anc.box_high[d])
                            err = fail(j, "leaf point escapes ancestor box");
                    if (!anc.is_leaf()) {
                        const bool left_of = p.features[anc.split_dim] <= anc.split_loc;
                        const bool in_left = path[a + 1] == anc.left;
                        if (left_of != in_left)
                            err = fail(j, "leaf point on the wrong split side");
                    }
                    if (err) break;
                }
                if (err) break;
            }
            if (!err && (hist[0] != n.class_counts[0] || hist[1] != n.class_counts[1]))
                err = fail(j, "leaf counts disagree with stored rows");
        } else {
            if (!(n.split_loc > n.box_low[n.split_dim] &&
                  n.split_loc < n.box_high[n.split_dim]))
                err = fail(j, "split location not strictly inside box");
            const MondrianNode& l = tree.nodes[n.left];
            const MondrianNode& r = tree.nodes[n.right];
            if (!err &&
                (n.class_counts[0] != l.class_counts[0] + r.class_counts[0] ||
                 n.class_counts[1] != l.class_counts[1] + r.class_counts[1]))
                err = fail(j, "internal counts are not the sum of children");
            if (!err) err = walk(n.left, n.split_time, path);
            if (!err) err = walk(n.right, n.split_time, path);
        }
        path.pop_back();
        return err;
    }
};

}  // namespace

std::optional<std::string> structural_audit(const MondrianForestModel& model) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        std::vector<int> path;
        AuditContext ctx{model, model.trees[t], static_cast<int>(t)};
        if (auto err = ctx.walk(model.trees[t].root, 0.0, path)) return err;
    }
    return std::nullopt;
}

}  // namespace sliceprop

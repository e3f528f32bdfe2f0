#include "fusekit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fusekit/csv.hpp"

namespace fusekit {

double threshold_grid_value(int step) {
    if (step < 0 || step >= kThresholdGridSize)
        throw validation_error("threshold grid step outside [0, 10]");
    return static_cast<double>(step) / 10.0;
}

std::vector<double> concat_features(const std::vector<double>& x, const std::vector<double>& answers) {
    std::vector<double> out;
    out.reserve(x.size() + answers.size());
    out.insert(out.end(), x.begin(), x.end());
    out.insert(out.end(), answers.begin(), answers.end());
    return out;
}

namespace {

void check_pair(const PosteriorPair& pair) {
    if (pair.p_x.size() != pair.p_s.size() || pair.p_x.size() != pair.prior.size())
        throw validation_error("fusion: posterior/prior lengths differ");
    if (pair.p_x.empty()) throw validation_error("fusion: empty posteriors");
    for (double p : pair.prior)
        if (!(p > 0.0)) throw validation_error("fusion: prior entries must be strictly positive");
}

}  // namespace

std::vector<double> nb_fuse_log_scores(const PosteriorPair& pair) {
    check_pair(pair);
    std::vector<double> scores(pair.p_x.size());
    for (std::size_t c = 0; c < scores.size(); ++c)
        scores[c] = std::log(pair.p_x[c]) + std::log(pair.p_s[c]) - std::log(pair.prior[c]);
    return scores;
}

std::vector<double> nb_fuse(const PosteriorPair& pair) {
    std::vector<double> scores = nb_fuse_log_scores(pair);
    normalize_log_scores(scores);
    return scores;
}

std::vector<double> modified_nb_fuse(const PosteriorPair& pair, const ThresholdTable& thresholds) {
    check_pair(pair);
    const std::size_t n = pair.p_x.size();
    if (thresholds.theta_x.size() != n || thresholds.theta_s.size() != n)
        throw validation_error("modified_nb_fuse: threshold table length differs from posteriors");
    std::vector<double> scores(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (pair.p_x[c] < thresholds.theta_x[c]) {
            scores[c] = std::log(pair.p_s[c]) - std::log(pair.prior[c]);
        } else if (pair.p_s[c] < thresholds.theta_s[c]) {
            scores[c] = std::log(pair.p_x[c]) - std::log(pair.prior[c]);
        } else {
            scores[c] = std::log(pair.p_x[c]) + std::log(pair.p_s[c]) - std::log(pair.prior[c]);
        }
    }
    normalize_log_scores(scores);
    return scores;
}

double grid_f1_at(const Matrix& posteriors, const std::vector<int>& labels, int class_index,
                  double theta) {
    std::size_t class_total = 0;
    std::size_t accepted = 0;
    std::size_t accepted_correct = 0;
    for (std::size_t i = 0; i < posteriors.rows(); ++i) {
        if (labels[i] != class_index) continue;
        ++class_total;
        const auto row = posteriors.row(i);
        const std::size_t pred = argmax(row);
        if (row[pred] > theta) {
            ++accepted;
            if (static_cast<int>(pred) == class_index) ++accepted_correct;
        }
    }
    if (class_total == 0 || accepted == 0) return 0.0;
    const double precision = static_cast<double>(accepted_correct) / static_cast<double>(accepted);
    const double recall = static_cast<double>(accepted_correct) / static_cast<double>(class_total);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::vector<double> grid_search_thresholds(const Matrix& posteriors, const std::vector<int>& labels,
                                           std::vector<std::string>* warnings) {
    if (posteriors.rows() != labels.size())
        throw validation_error("grid_search_thresholds: one posterior row per label required");
    const int n_classes = static_cast<int>(posteriors.cols());
    std::vector<double> thetas(n_classes, 0.0);
    for (int c = 0; c < n_classes; ++c) {
        bool has_samples = false;
        for (int label : labels)
            if (label == c) { has_samples = true; break; }
        if (!has_samples) {
            thetas[c] = 0.0;
            if (warnings)
                warnings->push_back("class " + std::to_string(c) +
                                    " has no samples; threshold defaults to 0");
            continue;
        }
        double best_f1 = -1.0;
        double best_theta = 0.0;
        for (int step = 0; step < kThresholdGridSize; ++step) {
            const double theta = threshold_grid_value(step);
            const double f1 = grid_f1_at(posteriors, labels, c, theta);
            if (f1 > best_f1) {  // strict: ties keep the smallest theta
                best_f1 = f1;
                best_theta = theta;
            }
        }
        thetas[c] = best_theta;
    }
    return thetas;
}

namespace {

// Unnormalized per-class score of the thresholded rule.
inline double branch_score(double px, double ps, double prior, double tx, double ts) {
    if (px < tx) return ps / prior;
    if (ps < ts) return px / prior;
    return px * ps / prior;
}

}  // namespace

ThresholdTable greedy_threshold_search(const Matrix& matrix_x, const Matrix& matrix_s,
                                       const std::vector<int>& labels,
                                       const std::vector<double>& prior) {
    if (matrix_x.rows() != matrix_s.rows() || matrix_x.cols() != matrix_s.cols())
        throw validation_error("greedy_threshold_search: posterior matrices are not congruent");
    if (matrix_x.rows() != labels.size())
        throw validation_error("greedy_threshold_search: one posterior row per label required");
    const std::size_t n = matrix_x.rows();
    const int n_classes = static_cast<int>(matrix_x.cols());
    if (prior.size() != matrix_x.cols())
        throw validation_error("greedy_threshold_search: prior length differs from class count");
    for (double p : prior)
        if (!(p > 0.0))
            throw validation_error("greedy_threshold_search: prior entries must be strictly positive");

    std::vector<int> class_total(n_classes, 0);
    for (int label : labels) {
        if (label < 0 || label >= n_classes)
            throw validation_error("greedy_threshold_search: label outside [0, n_classes)");
        ++class_total[label];
    }

    // Phase 1: one shared (theta_x, theta_s) pair for every class, chosen by
    // fused accuracy. Moving all classes together keeps the branch scores on
    // a common scale, so this step can discover that a whole source should
    // be gated off. Ties keep the smallest pair, so (0, 0) — the plain
    // product rule — wins unless gating measurably helps.
    Matrix scores(n, n_classes);
    double best_acc = -1.0;
    int best_gx = 0, best_gs = 0;
    for (int gx = 0; gx < kThresholdGridSize; ++gx) {
        for (int gs = 0; gs < kThresholdGridSize; ++gs) {
            const double tx = threshold_grid_value(gx);
            const double ts = threshold_grid_value(gs);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double best = -1.0;
                int arg = 0;
                for (int c = 0; c < n_classes; ++c) {
                    const double sc =
                        branch_score(matrix_x.at(i, c), matrix_s.at(i, c), prior[c], tx, ts);
                    if (sc > best) {
                        best = sc;
                        arg = c;
                    }
                }
                if (arg == labels[i]) ++correct;
            }
            const double acc = static_cast<double>(correct) / static_cast<double>(n);
            if (acc > best_acc) {
                best_acc = acc;
                best_gx = gx;
                best_gs = gs;
            }
        }
    }

    ThresholdTable table;
    table.theta_x.assign(n_classes, threshold_grid_value(best_gx));
    table.theta_s.assign(n_classes, threshold_grid_value(best_gs));
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < n_classes; ++c)
            scores.at(i, c) = branch_score(matrix_x.at(i, c), matrix_s.at(i, c), prior[c],
                                           table.theta_x[c], table.theta_s[c]);

    // Phase 2: one refinement pass, one class at a time, keeping the pair
    // that maximizes this class's F1 under the fused predictions with every
    // other class's thresholds held fixed.
    std::vector<double> other_max(n);
    std::vector<int> other_arg(n);
    for (int c = 0; c < n_classes; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = -1.0;
            int arg = 0;
            for (int k = 0; k < n_classes; ++k) {
                if (k == c) continue;
                if (scores.at(i, k) > best) {
                    best = scores.at(i, k);
                    arg = k;
                }
            }
            other_max[i] = best;
            other_arg[i] = arg;
        }

        double best_f1 = -1.0;
        int best_tx = 0, best_ts = 0;
        for (int tx = 0; tx < kThresholdGridSize; ++tx) {
            for (int ts = 0; ts < kThresholdGridSize; ++ts) {
                const double theta_x = threshold_grid_value(tx);
                const double theta_s = threshold_grid_value(ts);
                int predicted_c = 0, predicted_c_correct = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double sc = branch_score(matrix_x.at(i, c), matrix_s.at(i, c), prior[c],
                                                   theta_x, theta_s);
                    // argmax ties resolve to the lowest class index
                    const bool wins = n_classes == 1 || sc > other_max[i] ||
                                      (sc == other_max[i] && c < other_arg[i]);
                    if (wins) {
                        ++predicted_c;
                        if (labels[i] == c) ++predicted_c_correct;
                    }
                }
                double f1 = 0.0;
                if (predicted_c > 0 && class_total[c] > 0 && predicted_c_correct > 0) {
                    const double precision = static_cast<double>(predicted_c_correct) / predicted_c;
                    const double recall =
                        static_cast<double>(predicted_c_correct) / class_total[c];
                    f1 = 2.0 * precision * recall / (precision + recall);
                }
                if (f1 > best_f1) {  // strict: ties keep the smallest pair
                    best_f1 = f1;
                    best_tx = tx;
                    best_ts = ts;
                }
            }
        }
        table.theta_x[c] = threshold_grid_value(best_tx);
        table.theta_s[c] = threshold_grid_value(best_ts);
        for (std::size_t i = 0; i < n; ++i)
            scores.at(i, c) = branch_score(matrix_x.at(i, c), matrix_s.at(i, c), prior[c],
                                           table.theta_x[c], table.theta_s[c]);
    }
    return table;
}

FuseBatchResult fuse_batch(const Matrix& matrix_x, const Matrix& matrix_s,
                           const std::vector<double>& prior, FusionMethod method,
                           const std::optional<ThresholdTable>& thresholds) {
    if (matrix_x.rows() != matrix_s.rows() || matrix_x.cols() != matrix_s.cols())
        throw validation_error("fuse_batch: posterior matrices are not congruent");
    if (prior.size() != matrix_x.cols())
        throw validation_error("fuse_batch: prior length differs from class count");
    if (method == FusionMethod::modified_nb && !thresholds)
        throw validation_error("fuse_batch: modified_nb requires a threshold table");

    FuseBatchResult result;
    result.fused = Matrix(matrix_x.rows(), matrix_x.cols());
    result.predictions.resize(matrix_x.rows());
    PosteriorPair pair;
    pair.prior = prior;
    for (std::size_t i = 0; i < matrix_x.rows(); ++i) {
        pair.p_x = matrix_x.row_vec(i);
        pair.p_s = matrix_s.row_vec(i);
        const std::vector<double> fused = method == FusionMethod::equal_weight
                                              ? nb_fuse(pair)
                                              : modified_nb_fuse(pair, *thresholds);
        result.fused.set_row(i, fused);
        result.predictions[i] = static_cast<int>(argmax(fused));
    }
    return result;
}

void save_thresholds(const ThresholdTable& table, const std::vector<std::string>& class_names,
                     const std::string& path) {
    if (table.theta_x.size() != class_names.size() || table.theta_s.size() != class_names.size())
        throw validation_error("save_thresholds: table size differs from class names");
    std::ostringstream out;
    out << "fusekit-thresholds v1\n";
    out << "n_classes " << class_names.size() << '\n';
    for (std::size_t c = 0; c < class_names.size(); ++c)
        out << csv_escape(class_names[c]) << ',' << format_double(table.theta_x[c]) << ','
            << format_double(table.theta_s[c]) << '\n';
    write_text_file(path, out.str());
}

ThresholdTable load_thresholds(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2 || lines[0] != "fusekit-thresholds v1")
        throw validation_error(path + ": not a fusekit thresholds file");
    const auto n = parse_int(lines[1].substr(lines[1].find(' ') + 1), path + " n_classes");
    ThresholdTable table;
    for (long long c = 0; c < n; ++c) {
        const std::size_t row = 2 + static_cast<std::size_t>(c);
        if (row >= lines.size()) throw validation_error(path + ": truncated thresholds file");
        const auto cells = split_csv_line(lines[row]);
        if (cells.size() != 3)
            throw validation_error(path + " line " + std::to_string(row + 1) + ": expected 3 columns");
        const double tx = parse_double(cells[1], path + " theta_x");
        const double ts = parse_double(cells[2], path + " theta_s");
        for (double v : {tx, ts}) {
            const double scaled = v * 10.0;
            if (v < 0.0 || v > 1.0 || std::abs(scaled - std::llround(scaled)) > 1e-9)
                throw validation_error(path + ": threshold " + format_double(v) +
                                       " is not on the 0.1 grid");
        }
        table.theta_x.push_back(tx);
        table.theta_s.push_back(ts);
    }
    return table;
}

}  // namespace fusekit

#include "tvec/solver.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "tvec/diagnostics.hpp"
#include "tvec/io.hpp"
#include "tvec/kernels.hpp"
#include "tvec/seed.hpp"

namespace tvec {

namespace {

// F^T F accumulated as a sum of rank-one row updates.
Matrix gram(const Matrix& f) {
    const auto d = static_cast<std::size_t>(f.cols());
    Matrix g = Matrix::Zero(f.cols(), f.cols());
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < static_cast<std::size_t>(f.rows()); ++r) {
        const double* row = f.data() + r * d;
        for (std::size_t a = 0; a < d; ++a) k.axpy(row[a], row, g.data() + a * d, d);
    }
    return g;
}

double squared_frobenius(const Matrix& m) {
    return kernels::active().dot(m.data(), m.data(), static_cast<std::size_t>(m.size()));
}

double squared_frobenius_distance(const Matrix& a, const Matrix& b) {
    return kernels::active().squared_distance(a.data(), b.data(), static_cast<std::size_t>(a.size()));
}

void check_shapes(const EmbeddingSequence& seq, const PpmiSequence& Y) {
    if (seq.U.size() != seq.W.size()) throw ShapeError("U and W have different slice counts");
    if (seq.U.size() != Y.num_slices()) throw ShapeError("embedding and PPMI slice counts differ");
    const auto v = static_cast<Eigen::Index>(Y.vocab_size());
    const auto d = seq.U.empty() ? 0 : seq.U.front().cols();
    for (std::size_t t = 0; t < seq.U.size(); ++t) {
        if (seq.U[t].rows() != v || seq.W[t].rows() != v)
            throw ShapeError("factor rows differ from vocabulary size");
        if (seq.U[t].cols() != d || seq.W[t].cols() != d) throw ShapeError("factor dimensions differ");
    }
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

void SolverConfig::validate() const {
    if (dim < 1) throw std::invalid_argument("dim must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (block_rows < 1) throw std::invalid_argument("block_rows must be >= 1");
    for (double w : {lambda, tau, gamma})
        if (!std::isfinite(w) || w < 0) throw std::invalid_argument("lambda, tau, gamma must be finite and >= 0");
    if (!std::isfinite(init_scale) || init_scale < 0) throw std::invalid_argument("init_scale must be >= 0");
}

EmbeddingSequence init_embeddings(std::size_t vocab_size, std::size_t num_slices, const SolverConfig& config) {
    config.validate();
    if (vocab_size < 1 || num_slices < 1) throw std::invalid_argument("V and T must be >= 1");
    const double bound = config.init_scale / std::sqrt(static_cast<double>(config.dim));
    const auto v = static_cast<Eigen::Index>(vocab_size);
    const auto d = static_cast<Eigen::Index>(config.dim);

    const auto fill = [&](std::vector<Matrix>& out, std::string_view stream) {
        std::mt19937_64 rng(derive_seed(config.seed, stream));
        out.reserve(num_slices);
        for (std::size_t t = 0; t < num_slices; ++t) {
            Matrix m(v, d);
            for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
            out.push_back(std::move(m));
        }
    };

    EmbeddingSequence seq;
    seq.config = config;
    fill(seq.U, "init/U");
    fill(seq.W, "init/W");
    seq.labels.resize(num_slices);
    for (std::size_t t = 0; t < num_slices; ++t) seq.labels[t] = static_cast<SliceLabel>(t);
    return seq;
}

double objective(const EmbeddingSequence& seq, const PpmiSequence& Y) {
    check_shapes(seq, Y);
    const auto& cfg = seq.config;
    const auto& k = kernels::active();
    const std::size_t T = seq.num_slices();
    const std::size_t d = seq.dim();

    double residual = 0.0;
    double coupling = 0.0;
    double ridge = 0.0;
    double smooth = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const Matrix& U = seq.U[t];
        const Matrix& W = seq.W[t];
        const auto& y = Y[t].values;

        double y_sq = 0.0;
        double cross = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const auto cols = y.row_cols(i);
            const auto vals = y.row_values(i);
            const double* ui = U.data() + i * d;
            for (std::size_t n = 0; n < cols.size(); ++n) {
                y_sq += vals[n] * vals[n];
                cross += vals[n] * k.dot(ui, W.data() + cols[n] * d, d);
            }
        }
        const Matrix gu = gram(U);
        const Matrix gw = gram(W);
        const double trace = k.dot(gu.data(), gw.data(), static_cast<std::size_t>(gu.size()));
        residual += y_sq - 2.0 * cross + trace;

        coupling += squared_frobenius_distance(U, W);
        ridge += squared_frobenius(U) + squared_frobenius(W);
        if (t > 0)
            smooth += squared_frobenius_distance(seq.U[t - 1], U) + squared_frobenius_distance(seq.W[t - 1], W);
    }
    return 0.5 * residual + 0.5 * cfg.gamma * coupling + 0.5 * cfg.lambda * ridge + 0.5 * cfg.tau * smooth;
}

Matrix residual_gradient(const Matrix& U, const PpmiMatrix& Y) {
    const auto v = static_cast<std::size_t>(U.rows());
    const auto d = static_cast<std::size_t>(U.cols());
    if (Y.vocab_size() != v) throw ShapeError("gradient: U rows differ from PPMI size");
    const auto& k = kernels::active();

    // -2 Y U
    Matrix g = Matrix::Zero(U.rows(), U.cols());
    for (std::size_t i = 0; i < v; ++i) {
        const auto cols = Y.values.row_cols(i);
        const auto vals = Y.values.row_values(i);
        double* gi = g.data() + i * d;
        for (std::size_t n = 0; n < cols.size(); ++n) k.axpy(-2.0 * vals[n], U.data() + cols[n] * d, gi, d);
    }
    // + 2 U (U^T U)
    const Matrix gu = gram(U);
    g.noalias() += 2.0 * U * gu;
    return g;
}

int smoothing_neighbours(std::size_t t, std::size_t num_slices) {
    int c = 0;
    if (t > 0) ++c;
    if (t + 1 < num_slices) ++c;
    return c;
}

// --- normal equations -------------------------------------------------------

FactorSystem::FactorSystem(const EmbeddingSequence& state, const PpmiSequence& Y, Factor which, std::size_t t,
                           const SolverConfig& config)
    : state_(state), Y_(Y), which_(which), t_(t), config_(config) {
    check_shapes(state, Y);
    if (t >= state.num_slices()) throw ShapeError("slice index out of range");
    const Matrix& opposite = state.factor(which == Factor::kU ? Factor::kW : Factor::kU)[t];
    const double shift =
        config.gamma + config.lambda + smoothing_neighbours(t, state.num_slices()) * config.tau;
    lhs_ = gram(opposite);
    lhs_.diagonal().array() += shift;

    if (shift > 0.0) {
        llt_.compute(lhs_);
        if (llt_.info() == Eigen::Success) return;
    } else {
        cod_.compute(lhs_);
        if (cod_.rank() == lhs_.rows()) {
            llt_.compute(lhs_);
            if (llt_.info() == Eigen::Success) return;
        }
    }
    cod_.compute(lhs_);
    fallback_ = true;
    std::ostringstream msg;
    msg << "ridge system for slice " << t << " is singular (lambda = gamma = tau = 0); using least-norm solution";
    warn(msg.str());
}

Matrix FactorSystem::rhs(RowRange rows) const {
    const auto& k = kernels::active();
    const Matrix& opposite = state_.factor(which_ == Factor::kU ? Factor::kW : Factor::kU)[t_];
    const auto& same = state_.factor(which_);
    const std::size_t d = static_cast<std::size_t>(opposite.cols());
    const std::size_t T = state_.num_slices();
    const auto& y = Y_[t_].values;

    Matrix b = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), opposite.cols());
    for (std::size_t i = rows.begin; i < rows.end; ++i) {
        double* bi = b.data() + (i - rows.begin) * d;
        // Y is symmetric, so row i of Y serves for both U and W updates.
        const auto cols = y.row_cols(i);
        const auto vals = y.row_values(i);
        for (std::size_t n = 0; n < cols.size(); ++n) k.axpy(vals[n], opposite.data() + cols[n] * d, bi, d);
        k.axpy(config_.gamma, opposite.data() + i * d, bi, d);
        if (t_ > 0) k.axpy(config_.tau, same[t_ - 1].data() + i * d, bi, d);
        if (t_ + 1 < T) k.axpy(config_.tau, same[t_ + 1].data() + i * d, bi, d);
    }
    return b;
}

Matrix FactorSystem::solve(const Matrix& rhs) const {
    // rows * A = B  <=>  A * rows^T = B^T  (A symmetric)
    const Matrix bt = rhs.transpose();
    Matrix xt = fallback_ ? Matrix(cod_.solve(bt)) : Matrix(llt_.solve(bt));
    return xt.transpose();
}

BlockUpdate ridge_update_block(RowRange rows, const FactorSystem& system) {
    BlockUpdate out;
    const Matrix b = system.rhs(rows);
    out.rows = system.solve(b);
    const double b_norm = b.norm();
    const double r_norm = (out.rows * system.lhs() - b).norm();
    out.normal_residual = b_norm > 0 ? r_norm / b_norm : r_norm;
    return out;
}

BlockUpdate ridge_update_block(RowRange rows, Factor which, std::size_t t, const EmbeddingSequence& state,
                               const PpmiSequence& Y, const SolverConfig& config) {
    if (rows.begin > rows.end || rows.end > state.vocab_size()) throw ShapeError("row range out of bounds");
    return ridge_update_block(rows, FactorSystem(state, Y, which, t, config));
}

// --- training ---------------------------------------------------------------

namespace {

void write_checkpoint(const std::filesystem::path& path, const EmbeddingSequence& state, std::uint32_t epochs_done) {
    io::write_file_atomic(path, io::encode_checkpoint({state, epochs_done}));
}

}  // namespace

EmbeddingSequence train_from(EmbeddingSequence state, std::uint32_t first_epoch, const PpmiSequence& Y,
                             const TrainOptions& options) {
    const SolverConfig cfg = state.config;
    cfg.validate();
    check_shapes(state, Y);
    const std::size_t T = state.num_slices();
    const std::size_t V = state.vocab_size();

    for (std::uint32_t epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t t = 0; t < T; ++t) {
            for (Factor which : {Factor::kU, Factor::kW}) {
                const FactorSystem system(state, Y, which, t, cfg);
                Matrix& target = state.factor(which)[t];
                for (std::size_t begin = 0; begin < V; begin += cfg.block_rows) {
                    const RowRange rows{begin, std::min(V, begin + cfg.block_rows)};
                    BlockUpdate upd = ridge_update_block(rows, system);
                    // Rows of one factor never read each other, so writing in place is safe.
                    target.middleRows(static_cast<Eigen::Index>(rows.begin), static_cast<Eigen::Index>(rows.size())) =
                        upd.rows;
                    if (options.on_block) {
                        BlockEvent ev{epoch, t, which, rows, upd.normal_residual, std::nullopt};
                        if (options.track_block_objective) ev.objective = objective(state, Y);
                        options.on_block(ev);
                    }
                }
                if (!all_finite(target)) {
                    std::ostringstream msg;
                    msg << "non-finite values after updating " << (which == Factor::kU ? "U" : "W") << "(" << t
                        << ") in epoch " << epoch;
                    throw std::runtime_error(msg.str());
                }
            }
        }
        if (options.on_epoch) options.on_epoch({epoch, objective(state, Y)});
        if (options.checkpoint) write_checkpoint(*options.checkpoint, state, epoch);
    }
    return state;
}

EmbeddingSequence train(const PpmiSequence& Y, const SolverConfig& config, const TrainOptions& options) {
    config.validate();
    if (Y.num_slices() == 0) throw std::invalid_argument("no PPMI slices to train on");

    if (options.checkpoint && std::filesystem::exists(*options.checkpoint)) {
        io::Checkpoint ck = io::decode_checkpoint(io::read_file(*options.checkpoint));
        SolverConfig saved = ck.state.config;
        saved.epochs = config.epochs;
        if (saved == config && ck.state.labels == Y.labels() && ck.state.vocab_size() == Y.vocab_size()) {
            ck.state.config = config;
            return train_from(std::move(ck.state), ck.epochs_done + 1, Y, options);
        }
        warn("checkpoint " + options.checkpoint->string() + " does not match this run; starting over");
    }

    EmbeddingSequence state = init_embeddings(Y.vocab_size(), Y.num_slices(), config);
    state.labels = Y.labels();
    return train_from(std::move(state), 1, Y, options);
}

std::vector<Matrix> final_embedding(const EmbeddingSequence& seq, EmbeddingMode mode) {
    std::vector<Matrix> out;
    out.reserve(seq.num_slices());
    for (std::size_t t = 0; t < seq.num_slices(); ++t) {
        switch (mode) {
            case EmbeddingMode::kU:
                out.push_back(seq.U[t]);
                break;
            case EmbeddingMode::kW:
                out.push_back(seq.W[t]);
                break;
            case EmbeddingMode::kAverage:
                out.push_back(0.5 * (seq.U[t] + seq.W[t]));
                break;
        }
    }
    return out;
}

}  // namespace tvec

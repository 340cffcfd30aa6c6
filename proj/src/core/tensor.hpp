#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ral {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    if (s.empty()) return "scalar";
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(s[i]);
    }
    return out;
}

// Error taxonomy. Every failure the library reports maps onto one of these;
// the C API translates them into status codes.
struct RalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : RalError {
    using RalError::RalError;
};
struct ContractError : RalError {
    using RalError::RalError;
};
struct LabelError : RalError {
    using RalError::RalError;
};
struct FormatError : RalError {
    using RalError::RalError;
};
struct IoError : RalError {
    using RalError::RalError;
};
struct NumericError : RalError {
    std::string op;
    NumericError(std::string op_name, const std::string& msg)
        : RalError(msg), op(std::move(op_name)) {}
};

// Deterministic RNG. The raw engine is mt19937_64 but all derived draws
// (uniform/normal) are hand-rolled from its 64-bit output so streams do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // splitmix64-style stream derivation: mix(seed, k) yields independent
    // sub-stream seeds for sample k, worker k, ...
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 0x632BE59BD9B4E019ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return eng_(); }

    double uniform() {  // [0,1)
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    double normal() {  // Box-Muller with cached spare
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * (1.0 / 9007199254740993.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::string serialize() const {
        std::ostringstream os;
        os << eng_ << ' ' << (has_spare_ ? 1 : 0) << ' ' << spare_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        int flag = 0;
        is >> eng_ >> flag >> spare_;
        if (!is) throw FormatError("Rng::deserialize: malformed state string");
        has_spare_ = flag != 0;
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

template <typename S>
struct StorageT {
    Shape shape;
    std::vector<S> v;  // row-major data
    std::vector<S> g;  // gradient accumulator, sized lazily
    bool requires_grad = false;

    void ensure_grad() {
        if (g.size() != v.size()) g.assign(v.size(), S(0));
    }
};

// Value-semantic handle onto shared storage. Copying a TensorT aliases the
// same buffer; clone() makes a deep copy.
template <typename S>
class TensorT {
public:
    using Scalar = S;

    TensorT() = default;

    static TensorT zeros(Shape shape) {
        TensorT t;
        t.st_ = std::make_shared<StorageT<S>>();
        t.st_->shape = std::move(shape);
        t.st_->v.assign(static_cast<std::size_t>(shape_numel(t.st_->shape)), S(0));
        return t;
    }

    static TensorT full(Shape shape, S value) {
        TensorT t = zeros(std::move(shape));
        std::fill(t.st_->v.begin(), t.st_->v.end(), value);
        return t;
    }

    static TensorT scalar(S value) { return full({1}, value); }

    static TensorT from_vec(Shape shape, std::vector<S> data) {
        if (static_cast<std::int64_t>(data.size()) != shape_numel(shape))
            throw DimensionError("from_vec: shape " + shape_str(shape) + " needs " +
                                 std::to_string(shape_numel(shape)) + " values, got " +
                                 std::to_string(data.size()));
        TensorT t;
        t.st_ = std::make_shared<StorageT<S>>();
        t.st_->shape = std::move(shape);
        t.st_->v = std::move(data);
        return t;
    }

    bool defined() const { return st_ != nullptr; }
    const Shape& shape() const { return st_->shape; }
    int rank() const { return static_cast<int>(st_->shape.size()); }
    int dim(int i) const { return st_->shape[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(st_->v.size()); }

    S* data() { return st_->v.data(); }
    const S* data() const { return st_->v.data(); }
    std::vector<S>& vec() { return st_->v; }
    const std::vector<S>& vec() const { return st_->v; }

    bool requires_grad() const { return st_->requires_grad; }
    TensorT& set_requires_grad(bool rg) {
        st_->requires_grad = rg;
        return *this;
    }

    bool has_grad() const { return !st_->g.empty(); }
    std::vector<S>& grad() {
        st_->ensure_grad();
        return st_->g;
    }
    const std::vector<S>& grad_vec() const { return st_->g; }
    void zero_grad() {
        if (!st_->g.empty()) std::fill(st_->g.begin(), st_->g.end(), S(0));
    }

    S item() const {
        if (size() != 1)
            throw ContractError("item: tensor is not scalar, shape " + shape_str(shape()));
        return st_->v[0];
    }

    TensorT clone() const {
        TensorT t = from_vec(st_->shape, st_->v);
        t.st_->requires_grad = st_->requires_grad;
        return t;
    }

    std::shared_ptr<StorageT<S>> st() const { return st_; }

private:
    std::shared_ptr<StorageT<S>> st_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Reverse-mode tape. Ops append nodes in execution order, which is a valid
// topological order by construction; backward() walks it once in reverse.
// Constructing a TapeT makes it the active tape for this thread (RAII).
template <typename S>
class TapeT {
public:
    struct Node {
        const char* op;
        std::function<void()> backward;
    };

    TapeT() : prev_(current()) { current() = this; }
    ~TapeT() { current() = prev_; }
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    static TapeT*& current() {
        thread_local TapeT* cur = nullptr;
        return cur;
    }

    void record(const char* op, std::function<void()> fn) {
        nodes_.push_back(Node{op, std::move(fn)});
    }

    std::size_t node_count() const { return nodes_.size(); }

    void backward(const TensorT<S>& loss) {
        if (loss.size() != 1)
            throw ContractError("backward: loss must be scalar, got shape " +
                                shape_str(loss.shape()));
        if (consumed_)
            throw ContractError("backward: tape already consumed; build a fresh tape");
        consumed_ = true;
        loss.st()->ensure_grad();
        loss.st()->g[0] += S(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
    }

private:
    TapeT* prev_ = nullptr;
    std::vector<Node> nodes_;
    bool consumed_ = false;
};

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

// Runtime toggle for post-op output scanning. Off in normal training; tests
// and the NaN post-mortem in the trainer switch it on.
std::atomic<bool>& finite_checks_flag();
inline bool finite_checks_enabled() { return finite_checks_flag().load(std::memory_order_relaxed); }
inline void set_finite_checks(bool on) { finite_checks_flag().store(on, std::memory_order_relaxed); }

namespace debug {
// Test instrumentation: a named fault that selected backward kernels consult.
void set_fault(const std::string& name);
const std::string& fault();
}  // namespace debug

template <typename S>
void finite_check(const char* op, const TensorT<S>& t) {
    if (!finite_checks_enabled()) return;
    const S* p = t.data();
    const std::int64_t n = t.size();
    for (std::int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(static_cast<double>(p[i])))
            throw NumericError(op, std::string(op) + ": non-finite value at flat index " +
                                       std::to_string(i));
    }
}

// Shared op epilogue: wires requires_grad, records the backward closure when a
// tape is active, and runs the optional finite scan.
template <typename S>
void record_op(const char* op, bool any_input_rg, TensorT<S>& out, std::function<void()> fn) {
    auto* tape = TapeT<S>::current();
    if (tape && any_input_rg) {
        out.set_requires_grad(true);
        tape->record(op, std::move(fn));
    }
    finite_check(op, out);
}

}  // namespace ral

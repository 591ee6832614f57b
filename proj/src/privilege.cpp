#include "seqbias/privilege.hpp"

#include "seqbias/error.hpp"
#include "seqbias/rng.hpp"

namespace seqbias {

double harmonic(std::size_t k) {
    double h = 0.0;
    for (std::size_t i = 1; i <= k; ++i) h += 1.0 / double(i);
    return h;
}

PrivilegeProfile privilege_from_attention(std::span<const AttentionTensor> tensors) {
    if (tensors.empty()) throw InputError("privilege needs at least one attention tensor");
    const std::size_t layers = tensors.front().layers();
    const std::size_t n = tensors.front().seq_len();
    PrivilegeProfile profile;
    profile.phi.assign(n, 0.0);
    profile.layers = layers;
    profile.seq_len = n;
    profile.source = PrivilegeSource::empirical;
    profile.num_samples = tensors.size();

    for (const AttentionTensor& t : tensors) {
        if (t.layers() != layers || t.seq_len() != n)
            throw ShapeError("attention tensors differ in shape");
        for (std::size_t j = 0; j < n; ++j) {
            double received = 0.0;
            for (std::size_t l = 0; l < layers; ++l)
                for (std::size_t i = j; i < n; ++i) received += t(l, i, j);
            profile.phi[j] += received;
        }
    }
    for (double& p : profile.phi) p /= double(tensors.size());
    return profile;
}

PrivilegeProfile privilege_empirical(const ToyModel& model, std::span<const Sequence> inputs) {
    if (inputs.empty()) throw InputError("privilege_empirical needs a non-empty input set");
    const std::size_t n = inputs.front().size();
    std::vector<AttentionTensor> tensors;
    tensors.reserve(inputs.size());
    for (const Sequence& x : inputs) {
        if (x.size() != n) throw ShapeError("input sequences have mixed lengths");
        tensors.push_back(model.forward(x).attention);
    }
    return privilege_from_attention(tensors);
}

PrivilegeProfile privilege_uniform(std::size_t layers, std::size_t seq_len) {
    if (layers < 1 || seq_len < 1) throw InputError("privilege_uniform needs L >= 1 and n >= 1");
    PrivilegeProfile profile;
    profile.layers = layers;
    profile.seq_len = seq_len;
    profile.source = PrivilegeSource::uniform_closed_form;
    profile.phi.resize(seq_len);
    const double hn = harmonic(seq_len);
    for (std::size_t j = 1; j <= seq_len; ++j)
        profile.phi[j - 1] = double(layers) * (hn - harmonic(j - 1));
    return profile;
}

double privilege_gap(const PrivilegeProfile& profile) {
    if (profile.phi.size() < 2) throw InputError("privilege gap needs n >= 2");
    if (profile.source == PrivilegeSource::uniform_closed_form)
        return double(profile.layers) * harmonic(profile.seq_len - 1);
    return profile.phi.front() - profile.phi.back();
}

MonotonicityReport check_monotonicity(const PrivilegeProfile& profile) {
    const double tol =
        profile.source == PrivilegeSource::empirical ? kEmpiricalMonotonicityTol : 0.0;
    MonotonicityReport report;
    for (std::size_t j = 0; j + 1 < profile.phi.size(); ++j) {
        if (!(profile.phi[j] - profile.phi[j + 1] > tol)) {
            report.holds = false;
            report.first_violation = j + 1;
            break;
        }
    }
    return report;
}

std::vector<Sequence> random_sequences(std::size_t count, std::size_t length, std::size_t vocab,
                                       std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sequence> out(count, Sequence(length));
    for (Sequence& s : out)
        for (Token& t : s) t = static_cast<Token>(rng.below(vocab));
    return out;
}

}  // namespace seqbias

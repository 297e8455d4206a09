#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "iosvqa/error.hpp"
#include "iosvqa/random.hpp"
#include "iosvqa/vqa_builder.hpp"

namespace iosvqa {

namespace {

struct ReferenceSource {
    const char* name;
    std::size_t cases;
    double single_arch_fraction;
    std::size_t n_single_diseases;
    std::size_t n_occluded_diseases;
    bool occluded_from_back; // take the last occluded diseases instead of the first
    std::size_t high_quality;
    double label_coverage;
};

constexpr ReferenceSource kReference[] = {
    {"MaloccIOS", 14'630, 0.35, 2, 11, false, 557, 0.9},
    {"DiseaseIOS", 4'172, 1.0, 8, 0, false, 4'172, 1.0},
    {"Bits2Bites", 200, 0.0, 0, 5, true, 200, 1.0},
};

double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<int> ids_applicable(const DiseaseSchema& schema, ScanType scan) {
    std::vector<int> ids;
    for (const auto& d : schema.diseases())
        if (d.applies_to(scan)) ids.push_back(d.id);
    return ids;
}

SynthSource make_source(const ReferenceSource& ref, std::size_t n_cases, const DiseaseSchema& schema) {
    SynthSource src;
    src.name = ref.name;
    src.n_cases = n_cases;
    src.single_arch_fraction = ref.single_arch_fraction;
    src.label_coverage = ref.label_coverage;
    const auto sd = ids_applicable(schema, ScanType::SingleArch);
    const auto od = ids_applicable(schema, ScanType::OccludedArches);
    src.single_arch_diseases.assign(sd.begin(), sd.begin() + static_cast<std::ptrdiff_t>(std::min(ref.n_single_diseases, sd.size())));
    const std::size_t take = std::min(ref.n_occluded_diseases, od.size());
    if (ref.occluded_from_back) src.occluded_diseases.assign(od.end() - static_cast<std::ptrdiff_t>(take), od.end());
    else src.occluded_diseases.assign(od.begin(), od.begin() + static_cast<std::ptrdiff_t>(take));
    src.high_quality_cases = ref.high_quality == ref.cases
                                 ? n_cases
                                 : static_cast<std::size_t>(std::llround(static_cast<double>(ref.high_quality) *
                                                                         static_cast<double>(n_cases) /
                                                                         static_cast<double>(ref.cases)));
    return src;
}

std::string lower_ascii(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

SynthConfig reference_synth_config(const DiseaseSchema& schema) {
    SynthConfig config;
    for (const auto& ref : kReference) config.sources.push_back(make_source(ref, ref.cases, schema));
    return config;
}

SynthConfig scaled_synth_config(std::size_t n_cases, const DiseaseSchema& schema) {
    if (n_cases == 0) throw Error(ErrorCode::InvalidArgument, "n_cases must be at least 1");
    constexpr std::size_t kSources = std::size(kReference);
    // Enough cases for every source to reach all three stages, when possible.
    const std::size_t floor_each = n_cases >= 3 * kSources ? 3 : 0;
    const std::size_t spread = n_cases - floor_each * kSources;
    std::size_t reference_total = 0;
    for (const auto& ref : kReference) reference_total += ref.cases;

    std::array<std::size_t, kSources> counts{};
    std::array<double, kSources> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < kSources; ++i) {
        const double exact = static_cast<double>(spread) * static_cast<double>(kReference[i].cases) /
                             static_cast<double>(reference_total);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - std::floor(exact);
        assigned += counts[i];
    }
    std::array<std::size_t, kSources> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < spread; k = (k + 1) % kSources, ++assigned) ++counts[order[k]];

    SynthConfig config;
    for (std::size_t i = 0; i < kSources; ++i) {
        const std::size_t n = counts[i] + floor_each;
        if (n > 0) config.sources.push_back(make_source(kReference[i], n, schema));
    }
    return config;
}

std::vector<CaseRecord> synth_cases(std::uint64_t seed, const SynthConfig& config, const DiseaseSchema& schema) {
    std::vector<CaseRecord> cases;
    for (const auto& src : config.sources) {
        if (src.high_quality_cases > src.n_cases)
            throw Error(ErrorCode::InvalidArgument, "source '" + src.name + "' has more high-quality cases than cases");
        std::vector<bool> high(src.n_cases, false);
        for (auto i : sample_indices(src.n_cases, src.high_quality_cases, hash64(seed, "quality:" + src.name))) high[i] = true;

        const std::string prefix = lower_ascii(src.name);
        for (std::size_t i = 0; i < src.n_cases; ++i) {
            char id[64];
            std::snprintf(id, sizeof(id), "%s-%06zu", prefix.c_str(), i);
            CaseRecord c;
            c.case_id = id;
            c.source = src.name;
            c.mesh_path = "meshes/" + c.case_id + ".stl";
            c.quality = high[i] ? Quality::High : Quality::Noisy;

            Rng rng(hash64(seed, c.case_id));
            const bool has_single = !src.single_arch_diseases.empty();
            const bool has_occluded = !src.occluded_diseases.empty();
            bool single = unit(rng) < src.single_arch_fraction;
            if (!has_occluded) single = true;
            if (!has_single) single = false;
            c.scan_type = single ? ScanType::SingleArch : ScanType::OccludedArches;
            const auto& pool = single ? src.single_arch_diseases : src.occluded_diseases;

            // A per-case severity drives co-occurring abnormal labels.
            const double severity = unit(rng);
            for (int id_d : pool) {
                const double keep = unit(rng);
                const double u0 = unit(rng);
                const double u1 = unit(rng);
                if (keep >= src.label_coverage) continue;
                const Disease& d = schema.at(id_d);
                const std::size_t n_labels = d.labels.size();
                std::size_t index = 0;
                if (u0 >= 0.75 - 0.5 * severity) {
                    const double skew = std::pow(u1, 2.0 - severity);
                    index = 1 + std::min(n_labels - 2, static_cast<std::size_t>(skew * static_cast<double>(n_labels - 1)));
                }
                c.labels[id_d] = d.labels[index].label;
            }
            if (c.labels.empty() && !pool.empty()) {
                const int id_d = pool[uniform_below(rng, pool.size())];
                c.labels[id_d] = schema.at(id_d).labels.front().label;
            }
            cases.push_back(std::move(c));
        }
    }
    return cases;
}

std::string synth_manifest(std::uint64_t seed, std::size_t n_cases, const DiseaseSchema& schema) {
    return write_manifest(synth_cases(seed, scaled_synth_config(n_cases, schema), schema));
}

} // namespace iosvqa

#pragma once

// Spectral preprocessing: per-epoch discrete Fourier transforms (unnormalized
// forward transform F_m = sum_j B_j exp(-i 2 pi m j / J), computed with FFTW's
// real-to-complex plan), band magnitude extraction, region averaging, and the
// log transform that produces BandPowerMatrix inputs for the tests.
//
// Conventions:
//   - bin m corresponds to frequency m * sample_rate / J; a bin belongs to a
//     band iff low_hz <= f_m <= high_hz (inclusive edges);
//   - band aggregation is the mean magnitude |F_m| by default, mean squared
//     magnitude behind a flag;
//   - powers are floored at floor_rel * (largest power in the matrix), never
//     below 1e-300, before taking the natural log.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <fftw3.h>

#include "ok/errors.hpp"

namespace ok {

struct EpochTimeSeries {
    int n_series = 0;
    int n_time = 0;
    double sample_rate = 0.0;
    std::vector<double> samples;  // row-major n_series x n_time

    std::span<const double> series(int s) const {
        return {samples.data() + static_cast<std::size_t>(s) * n_time,
                static_cast<std::size_t>(n_time)};
    }
};

struct Band {
    std::string name;
    double low_hz = 0.0;
    double high_hz = 0.0;
};

// The canonical frequency bands.
inline const std::vector<Band>& standard_bands() {
    static const std::vector<Band> bands = {
        {"delta", 1.0, 4.0}, {"theta", 5.0, 7.0}, {"alpha", 8.0, 12.0},
        {"beta", 15.0, 29.0}, {"gamma", 30.0, 80.0},
    };
    return bands;
}

inline Band standard_band(const std::string& name) {
    for (const Band& b : standard_bands()) {
        if (b.name == name) return b;
    }
    throw InvalidRange("unknown band name: " + name);
}

struct Magnitudes {
    int n_series = 0;
    int n_bins = 0;  // J/2 + 1
    int n_time = 0;
    double sample_rate = 0.0;
    std::vector<double> values;  // row-major n_series x n_bins

    std::span<const double> series(int s) const {
        return {values.data() + static_cast<std::size_t>(s) * n_bins,
                static_cast<std::size_t>(n_bins)};
    }
};

struct BandPowerMatrix {
    int n_regions = 0;
    int n_epochs = 0;
    std::vector<double> values;  // row-major n_regions x n_epochs

    std::span<const double> region_row(int r) const {
        if (r < 0 || r >= n_regions) throw OutOfRange("BandPowerMatrix: region out of range");
        return {values.data() + static_cast<std::size_t>(r) * n_epochs,
                static_cast<std::size_t>(n_epochs)};
    }
    double at(int r, int e) const {
        if (r < 0 || r >= n_regions || e < 0 || e >= n_epochs) {
            throw OutOfRange("BandPowerMatrix: index out of range");
        }
        return values[static_cast<std::size_t>(r) * n_epochs + e];
    }
};

namespace detail {

inline void check_epoch(const EpochTimeSeries& epoch) {
    if (epoch.n_time < 2) throw InvalidRange("epoch needs at least two time points");
    if (epoch.n_series < 1) throw InvalidRange("epoch needs at least one series");
    if (!(epoch.sample_rate > 0.0)) throw InvalidRange("sample rate must be positive");
    if (epoch.samples.size() !=
        static_cast<std::size_t>(epoch.n_series) * static_cast<std::size_t>(epoch.n_time)) {
        throw ShapeMismatch("epoch sample storage does not match its dimensions");
    }
}

inline void check_band(const Band& band, double sample_rate) {
    if (!(band.low_hz >= 0.0 && band.low_hz < band.high_hz)) {
        throw InvalidRange("band must satisfy 0 <= low < high");
    }
    if (band.high_hz > sample_rate / 2.0) {
        throw InvalidRange("band exceeds the Nyquist frequency");
    }
}

}  // namespace detail

// |F_m| per series for m = 0..J/2 (unnormalized forward transform).
inline Magnitudes dft_magnitudes(const EpochTimeSeries& epoch) {
    detail::check_epoch(epoch);
    const int j = epoch.n_time;
    const int bins = j / 2 + 1;
    Magnitudes out;
    out.n_series = epoch.n_series;
    out.n_bins = bins;
    out.n_time = j;
    out.sample_rate = epoch.sample_rate;
    out.values.resize(static_cast<std::size_t>(epoch.n_series) * bins);

    double* in = fftw_alloc_real(static_cast<std::size_t>(j));
    fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(bins));
    fftw_plan plan = fftw_plan_dft_r2c_1d(j, in, spec, FFTW_ESTIMATE);
    for (int s = 0; s < epoch.n_series; ++s) {
        const auto row = epoch.series(s);
        std::copy(row.begin(), row.end(), in);
        fftw_execute(plan);
        for (int m = 0; m < bins; ++m) {
            out.values[static_cast<std::size_t>(s) * bins + m] =
                std::hypot(spec[m][0], spec[m][1]);
        }
    }
    fftw_destroy_plan(plan);
    fftw_free(spec);
    fftw_free(in);
    return out;
}

// Mean magnitude (or squared magnitude) over the bins inside the band.
inline std::vector<double> band_power(const Magnitudes& mags, const Band& band,
                                      bool squared = false) {
    detail::check_band(band, mags.sample_rate);
    std::vector<int> bins;
    for (int m = 0; m < mags.n_bins; ++m) {
        const double f = static_cast<double>(m) * mags.sample_rate / mags.n_time;
        if (f >= band.low_hz && f <= band.high_hz) bins.push_back(m);
    }
    if (bins.empty()) throw EmptyBand("band [" + band.name + "] contains no frequency bin");
    std::vector<double> out(mags.n_series, 0.0);
    for (int s = 0; s < mags.n_series; ++s) {
        const auto row = mags.series(s);
        double acc = 0.0;
        for (int m : bins) acc += squared ? row[m] * row[m] : row[m];
        out[s] = acc / static_cast<double>(bins.size());
    }
    return out;
}

// Arithmetic mean within each region (ids 1..A); empty regions come back
// absent. require_all_regions turns an absent region into an EmptyRegion.
inline std::vector<std::optional<double>> region_average(std::span<const double> per_source,
                                                         std::span<const int> region_map, int a) {
    if (per_source.size() != region_map.size()) {
        throw ShapeMismatch("region map size does not match the source count");
    }
    if (a < 1) throw InvalidRange("region count must be at least 1");
    std::vector<double> sums(static_cast<std::size_t>(a), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(a), 0);
    for (std::size_t s = 0; s < per_source.size(); ++s) {
        const int r = region_map[s];
        if (r < 1 || r > a) throw OutOfRange("region id outside 1..A");
        sums[static_cast<std::size_t>(r - 1)] += per_source[s];
        ++counts[static_cast<std::size_t>(r - 1)];
    }
    std::vector<std::optional<double>> out(static_cast<std::size_t>(a));
    for (int r = 0; r < a; ++r) {
        if (counts[static_cast<std::size_t>(r)] > 0) {
            out[static_cast<std::size_t>(r)] =
                sums[static_cast<std::size_t>(r)] / counts[static_cast<std::size_t>(r)];
        }
    }
    return out;
}

inline std::vector<double> require_all_regions(const std::vector<std::optional<double>>& regions) {
    std::vector<double> out;
    out.reserve(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
        if (!regions[r]) {
            throw EmptyRegion("region " + std::to_string(r + 1) + " has no sources");
        }
        out.push_back(*regions[r]);
    }
    return out;
}

struct SpectrumConfig {
    bool squared_magnitude = false;
    double floor_rel = 1e-12;  // log floor as a fraction of the largest power
};

// Column n = log of region-averaged band powers of epoch n.
inline BandPowerMatrix build_band_power_matrix(const std::vector<EpochTimeSeries>& epochs,
                                               const Band& band, std::span<const int> region_map,
                                               int a, const SpectrumConfig& config = {}) {
    if (epochs.empty()) throw EmptySample("build_band_power_matrix: no epochs");
    const int n_epochs = static_cast<int>(epochs.size());
    for (const auto& e : epochs) {
        detail::check_epoch(e);
        if (e.n_series != epochs.front().n_series || e.n_time != epochs.front().n_time ||
            e.sample_rate != epochs.front().sample_rate) {
            throw ShapeMismatch("epochs must share dimensions and sample rate");
        }
    }
    BandPowerMatrix out;
    out.n_regions = a;
    out.n_epochs = n_epochs;
    out.values.resize(static_cast<std::size_t>(a) * n_epochs);
    std::vector<double> powers(out.values.size());
    for (int e = 0; e < n_epochs; ++e) {
        const auto mags = dft_magnitudes(epochs[static_cast<std::size_t>(e)]);
        const auto per_source = band_power(mags, band, config.squared_magnitude);
        const auto per_region = require_all_regions(region_average(per_source, region_map, a));
        for (int r = 0; r < a; ++r) {
            powers[static_cast<std::size_t>(r) * n_epochs + e] =
                per_region[static_cast<std::size_t>(r)];
        }
    }
    double max_power = 0.0;
    for (double p : powers) max_power = std::max(max_power, p);
    const double floor = std::max(config.floor_rel * max_power, 1e-300);
    for (std::size_t i = 0; i < powers.size(); ++i) {
        out.values[i] = std::log(std::max(powers[i], floor));
    }
    return out;
}

// ---------------------------------------------------------------------------
// File formats.
//   - Epoch CSV: one file per epoch, one row per series, comma-separated.
//   - Epoch binary container: "OKMAT1\n", then three little-endian doubles
//     (n_series, n_time, sample_rate), then the row-major samples.
//   - BandPowerMatrix CSV: header line "regions,epochs,band", one meta row,
//     then one row per region.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<double> parse_csv_row(const std::string& line, const std::string& path) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= line.size()) {
        const std::size_t comma = line.find(',', start);
        const std::string field =
            line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw IoError(path + ": malformed numeric field '" + field + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

inline EpochTimeSeries read_epoch_csv(const std::string& path, double sample_rate) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    EpochTimeSeries epoch;
    epoch.sample_rate = sample_rate;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto row = detail::parse_csv_row(line, path);
        if (epoch.n_series == 0) {
            epoch.n_time = static_cast<int>(row.size());
        } else if (static_cast<int>(row.size()) != epoch.n_time) {
            throw IoError(path + ": ragged rows");
        }
        epoch.samples.insert(epoch.samples.end(), row.begin(), row.end());
        ++epoch.n_series;
    }
    detail::check_epoch(epoch);
    return epoch;
}

inline void write_epoch_csv(const std::string& path, const EpochTimeSeries& epoch) {
    detail::check_epoch(epoch);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (int s = 0; s < epoch.n_series; ++s) {
        const auto row = epoch.series(s);
        for (int t = 0; t < epoch.n_time; ++t) {
            if (t > 0) out << ',';
            out << detail::format_g17(row[static_cast<std::size_t>(t)]);
        }
        out << '\n';
    }
    if (!out) throw IoError("short write to " + path);
}

inline void write_epoch_bin(const std::string& path, const EpochTimeSeries& epoch) {
    detail::check_epoch(epoch);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("OKMAT1\n", 7);
    const double header[3] = {static_cast<double>(epoch.n_series),
                              static_cast<double>(epoch.n_time), epoch.sample_rate};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    out.write(reinterpret_cast<const char*>(epoch.samples.data()),
              static_cast<std::streamsize>(epoch.samples.size() * sizeof(double)));
    if (!out) throw IoError("short write to " + path);
}

inline EpochTimeSeries read_epoch_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[7];
    in.read(magic, 7);
    if (!in || std::string(magic, 7) != "OKMAT1\n") {
        throw IoError(path + ": not an epoch container");
    }
    double header[3];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in) throw IoError(path + ": truncated header");
    EpochTimeSeries epoch;
    epoch.n_series = static_cast<int>(header[0]);
    epoch.n_time = static_cast<int>(header[1]);
    epoch.sample_rate = header[2];
    if (epoch.n_series < 1 || epoch.n_time < 2) throw IoError(path + ": bad dimensions");
    epoch.samples.resize(static_cast<std::size_t>(epoch.n_series) * epoch.n_time);
    in.read(reinterpret_cast<char*>(epoch.samples.data()),
            static_cast<std::streamsize>(epoch.samples.size() * sizeof(double)));
    if (!in) throw IoError(path + ": truncated samples");
    return epoch;
}

// An optional preamble (e.g. '#'-prefixed metadata comment lines, newline
// terminated) is written before the header; the reader skips such lines.
inline void write_band_power_csv(const std::string& path, const BandPowerMatrix& matrix,
                                 const std::string& band_name,
                                 const std::string& preamble = "") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << preamble;
    out << "regions,epochs,band\n";
    out << matrix.n_regions << ',' << matrix.n_epochs << ',' << band_name << '\n';
    for (int r = 0; r < matrix.n_regions; ++r) {
        const auto row = matrix.region_row(r);
        for (int e = 0; e < matrix.n_epochs; ++e) {
            if (e > 0) out << ',';
            out << detail::format_g17(row[static_cast<std::size_t>(e)]);
        }
        out << '\n';
    }
    if (!out) throw IoError("short write to " + path);
}

struct NamedBandPower {
    BandPowerMatrix matrix;
    std::string band_name;
};

// Lines starting with '#' are comments (tools embed run metadata in them)
// and are skipped wherever they appear.
inline NamedBandPower read_band_power_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    auto next_line = [&in](std::string& out_line) {
        while (std::getline(in, out_line)) {
            if (!out_line.empty() && out_line[0] == '#') continue;
            return true;
        }
        return false;
    };
    if (!next_line(line) || line != "regions,epochs,band") {
        throw IoError(path + ": missing band power header");
    }
    if (!next_line(line)) throw IoError(path + ": missing meta row");
    NamedBandPower out;
    {
        std::istringstream meta(line);
        std::string field;
        std::getline(meta, field, ',');
        out.matrix.n_regions = std::stoi(field);
        std::getline(meta, field, ',');
        out.matrix.n_epochs = std::stoi(field);
        std::getline(meta, out.band_name);
    }
    if (out.matrix.n_regions < 1 || out.matrix.n_epochs < 1) {
        throw IoError(path + ": bad matrix dimensions");
    }
    while (next_line(line)) {
        if (line.empty()) continue;
        const auto row = detail::parse_csv_row(line, path);
        if (static_cast<int>(row.size()) != out.matrix.n_epochs) {
            throw IoError(path + ": row length does not match the epoch count");
        }
        out.matrix.values.insert(out.matrix.values.end(), row.begin(), row.end());
    }
    if (out.matrix.values.size() !=
        static_cast<std::size_t>(out.matrix.n_regions) * out.matrix.n_epochs) {
        throw IoError(path + ": row count does not match the region count");
    }
    return out;
}

}  // namespace ok

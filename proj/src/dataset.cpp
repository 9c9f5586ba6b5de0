#include "oodgen/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "oodgen/errors.hpp"
#include "oodgen/model_io.hpp"
#include "oodgen/rng.hpp"

namespace oodgen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void append_gaussian_cluster(DenseMatrix& points, std::size_t row0, std::size_t n, double cx,
                             double cy, double sigma, Rng& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        points(row0 + i, 0) = cx + sigma * rng.gaussian();
        points(row0 + i, 1) = cy + sigma * rng.gaussian();
    }
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_coord(const std::string& field, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') {
        throw ValueError("malformed csv field '" + field + "' at line " +
                         std::to_string(line_no));
    }
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    return fields;
}

}  // namespace

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

std::string_view ood_kind_name(OodKind k) {
    switch (k) {
        case OodKind::between_modes: return "between_modes";
        case OodKind::far_ring: return "far_ring";
        case OodKind::held_out_classes: return "held_out_classes";
    }
    return "between_modes";
}

OodKind ood_kind_from_name(std::string_view name) {
    if (name == "between_modes") return OodKind::between_modes;
    if (name == "far_ring") return OodKind::far_ring;
    if (name == "held_out_classes") return OodKind::held_out_classes;
    throw ValueError("unknown ood kind: " + std::string(name));
}

LabeledDataset gen_ring_subset(std::uint64_t seed, int classes_total, int first_class,
                               int class_count, int n_per_class, double radius, double sigma,
                               Split split) {
    if (classes_total < 2) throw ValueError("gen ring: classes_total must be >= 2");
    if (class_count < 1 || first_class < 0 || first_class + class_count > classes_total) {
        throw ValueError("gen ring: class range out of bounds");
    }
    if (n_per_class < 1) throw ValueError("gen ring: n_per_class must be >= 1");
    if (radius <= 0.0) throw ValueError("gen ring: radius must be positive");
    if (sigma < 0.0) throw ValueError("gen ring: sigma must be non-negative");

    Rng rng(seed);
    LabeledDataset ds;
    ds.split = split;
    ds.num_classes = class_count;
    const std::size_t n = static_cast<std::size_t>(class_count) * n_per_class;
    ds.points = DenseMatrix(n, 2);
    ds.labels.resize(n);
    for (int c = 0; c < class_count; ++c) {
        const double angle = kTwoPi * (first_class + c) / classes_total;
        const std::size_t row0 = static_cast<std::size_t>(c) * n_per_class;
        append_gaussian_cluster(ds.points, row0, n_per_class, radius * std::cos(angle),
                                radius * std::sin(angle), sigma, rng);
        for (int i = 0; i < n_per_class; ++i) ds.labels[row0 + i] = c;
    }
    return ds;
}

LabeledDataset gen_gaussian_ring(std::uint64_t seed, int num_classes, int n_per_class,
                                 double radius, double sigma, Split split) {
    return gen_ring_subset(seed, num_classes, 0, num_classes, n_per_class, radius, sigma,
                           split);
}

LabeledDataset gen_id_split(std::uint64_t seed, const RingSpec& spec, int n_per_class,
                            Split split) {
    if (spec.classes_seen < 2 || spec.classes_seen > spec.classes_total) {
        throw ValueError("gen ring: classes_seen out of range");
    }
    return gen_ring_subset(seed, spec.classes_total, 0, spec.classes_seen, n_per_class,
                           spec.radius, spec.sigma, split);
}

OodTestSet gen_ood_test(OodKind kind, std::uint64_t seed, int m, const RingSpec& spec) {
    if (m < 1) throw ValueError("gen_ood_test: m must be >= 1");
    Rng rng(seed);
    OodTestSet set;
    set.kind = kind;
    set.points = DenseMatrix(static_cast<std::size_t>(m), 2);

    switch (kind) {
        case OodKind::between_modes: {
            // Gaussians at the angular midpoints between cyclically adjacent
            // seen-class centers, same radius and sigma as the ID classes.
            std::vector<double> mid_angles;
            for (int c = 0; c < spec.classes_seen; ++c) {
                const double a0 = kTwoPi * c / spec.classes_total;
                const double a1 = (c + 1 < spec.classes_seen)
                                      ? kTwoPi * (c + 1) / spec.classes_total
                                      : kTwoPi;  // wrap back to slot 0
                mid_angles.push_back(0.5 * (a0 + a1));
            }
            for (int i = 0; i < m; ++i) {
                const double angle = mid_angles[i % mid_angles.size()];
                set.points(i, 0) = spec.radius * std::cos(angle) + spec.sigma * rng.gaussian();
                set.points(i, 1) = spec.radius * std::sin(angle) + spec.sigma * rng.gaussian();
            }
            break;
        }
        case OodKind::far_ring: {
            const double r = 2.0 * spec.radius;
            for (int i = 0; i < m; ++i) {
                const double angle = rng.uniform(0.0, kTwoPi);
                set.points(i, 0) = r * std::cos(angle);
                set.points(i, 1) = r * std::sin(angle);
            }
            break;
        }
        case OodKind::held_out_classes: {
            const int held = spec.classes_total - spec.classes_seen;
            if (held < 1) {
                throw ValueError("gen_ood_test: no held-out classes in ring spec");
            }
            for (int i = 0; i < m; ++i) {
                const int c = spec.classes_seen + (i % held);
                const double angle = kTwoPi * c / spec.classes_total;
                set.points(i, 0) = spec.radius * std::cos(angle) + spec.sigma * rng.gaussian();
                set.points(i, 1) = spec.radius * std::sin(angle) + spec.sigma * rng.gaussian();
            }
            break;
        }
    }
    return set;
}

void save_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
    std::string out = "x1,x2,label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out += format_coord(ds.points(i, 0));
        out += ',';
        out += format_coord(ds.points(i, 1));
        out += ',';
        out += std::to_string(ds.labels[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

LabeledDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    LabeledDataset ds;
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> coords;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) continue;  // header
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw ValueError("malformed csv row at line " + std::to_string(line_no) +
                             ": expected 3 fields, got " + std::to_string(fields.size()));
        }
        coords.push_back(parse_coord(fields[0], line_no));
        coords.push_back(parse_coord(fields[1], line_no));
        const long label = std::strtol(fields[2].c_str(), nullptr, 10);
        ds.labels.push_back(static_cast<int>(label));
        max_label = std::max(max_label, static_cast<int>(label));
    }
    ds.points = DenseMatrix(ds.labels.size(), 2, std::move(coords));
    ds.num_classes = max_label + 1;
    return ds;
}

void save_points_csv(const DenseMatrix& points, const std::filesystem::path& path) {
    check_shape(points.cols == 2, "save_points_csv: expected 2 columns");
    std::string out = "x1,x2\n";
    for (std::size_t i = 0; i < points.rows; ++i) {
        out += format_coord(points(i, 0));
        out += ',';
        out += format_coord(points(i, 1));
        out += '\n';
    }
    write_file_atomic(path, out);
}

DenseMatrix load_points_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> coords;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) continue;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2) {
            throw ValueError("malformed csv row at line " + std::to_string(line_no) +
                             ": expected 2 fields, got " + std::to_string(fields.size()));
        }
        coords.push_back(parse_coord(fields[0], line_no));
        coords.push_back(parse_coord(fields[1], line_no));
    }
    return DenseMatrix(coords.size() / 2, 2, std::move(coords));
}

}  // namespace oodgen

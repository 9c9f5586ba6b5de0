#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "oodgen/matrix.hpp"

namespace oodgen {

enum class Split { train, val, test };

std::string_view split_name(Split s);

/// Labeled 2-D points; labels are class indices in 0..num_classes-1.
struct LabeledDataset {
    DenseMatrix points;       // n x 2
    std::vector<int> labels;  // length n
    Split split = Split::train;
    int num_classes = 0;

    std::size_t size() const { return points.rows; }
};

enum class OodKind { between_modes, far_ring, held_out_classes };

std::string_view ood_kind_name(OodKind k);
OodKind ood_kind_from_name(std::string_view name);

/// Unlabeled OOD test points; detection-only, no class labels downstream.
struct OodTestSet {
    DenseMatrix points;  // m x 2
    OodKind kind = OodKind::between_modes;
};

/// Ring geometry shared by the ID generator and the OOD test generators.
/// The ring has classes_total Gaussian slots at angles 2*pi*c/classes_total;
/// the ID classifier sees slots 0..classes_seen-1 and the remaining slots are
/// the held-out classes (the seen/unseen class split protocol).
struct RingSpec {
    int classes_total = 16;
    int classes_seen = 8;
    double radius = 4.0;
    double sigma = 0.35;
};

/// Isotropic Gaussian classes on a ring: class c of C is centered at
/// (R*cos(2*pi*c/C), R*sin(2*pi*c/C)) with standard deviation sigma.
LabeledDataset gen_gaussian_ring(std::uint64_t seed, int num_classes, int n_per_class,
                                 double radius, double sigma, Split split = Split::train);

/// Subset form: generates class_count classes starting at first_class out of a
/// classes_total-slot ring, relabeled 0..class_count-1 in slot order.
LabeledDataset gen_ring_subset(std::uint64_t seed, int classes_total, int first_class,
                               int class_count, int n_per_class, double radius, double sigma,
                               Split split);

/// ID train or val split for the given ring spec (seen classes only).
LabeledDataset gen_id_split(std::uint64_t seed, const RingSpec& spec, int n_per_class,
                            Split split);

OodTestSet gen_ood_test(OodKind kind, std::uint64_t seed, int m, const RingSpec& spec);

/// CSV with header "x1,x2,label"; coordinates printed with 17 significant
/// digits so the round trip is lossless.
void save_csv(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset load_csv(const std::filesystem::path& path);

/// CSV with header "x1,x2" for unlabeled point sets.
void save_points_csv(const DenseMatrix& points, const std::filesystem::path& path);
DenseMatrix load_points_csv(const std::filesystem::path& path);

}  // namespace oodgen

#pragma once

// Flower glyphs: 12 teardrop petals and a center circle whose areas are
// proportional to per-category ADE rates, with darker serious subsets.

#include "ademiner/normalization.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ade {

struct Point {
    double x = 0;
    double y = 0;
};

// Absolute M/L/Q/Z path over the unit petal (base at the origin, apex at
// (0,-1)).
struct PathCommand {
    char op = 'M';
    std::vector<Point> points;
};

std::vector<PathCommand> parse_path(std::string_view d);
// Exact signed area of a closed path made of lines and quadratic curves.
double path_area(const std::vector<PathCommand>& path);

inline constexpr std::string_view canonical_petal_path = "M 0,0 Q 0.42,-0.7 0,-1 Q -0.42,-0.7 0,0 Z";

struct CategoryStyle {
    std::string category_id;
    std::optional<int> petal_index; // nullopt: center
    std::string fill;
    std::string serious_fill;
};

class GlyphStyles {
public:
    // Style file: `category_id|petal_index_or_center|fill_hex|serious_hex`,
    // plus an optional `petal_path|<path>` line. An empty serious_hex is the
    // fill darkened 45% toward black.
    static GlyphStyles load(std::string_view document);
    static const GlyphStyles& defaults();

    // Indexed like ade_category_ids.
    const std::array<CategoryStyle, 13>& categories() const noexcept { return styles_; }
    const std::vector<PathCommand>& petal() const noexcept { return petal_; }
    double petal_area() const noexcept { return petal_area_; }

private:
    std::array<CategoryStyle, 13> styles_;
    std::vector<PathCommand> petal_;
    double petal_area_ = 0;
};

std::string write_styles(const GlyphStyles& s);

// "#RRGGBB" blended toward black by `amount` in [0,1].
std::string darken(std::string_view hex, double amount);

struct GlyphSpec {
    AdeProfile profile;
    double reference_rate = 1;
    int canvas_px = 260;
    std::string caption;
};

// Petal length in pixels and the center radius at the reference rate (same
// area as a full petal).
double petal_length_px(int canvas_px);
double max_center_radius(const GlyphStyles& styles, int canvas_px);

// Throws ValidationError when reference_rate is not positive or lies below a
// category rate.
std::string render_flower_svg(const GlyphSpec& spec, const GlyphStyles& styles = GlyphStyles::defaults());

// The target glyph with the selected glyph's outlines drawn unfilled on top.
std::string render_overlay_svg(const GlyphSpec& selected, const GlyphSpec& target,
                               const GlyphStyles& styles = GlyphStyles::defaults());

// Largest category rate across the profiles, or 1 when all are zero.
double shared_reference_rate(const std::vector<const AdeProfile*>& profiles);

int canvas_px_for(std::size_t n_glyphs);

// White at <= 0.05% to red at >= 5% on a log scale. Throws ValidationError on
// a negative rate.
std::string table_color(double rate);

} // namespace ade

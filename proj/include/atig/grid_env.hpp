#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace atig {

enum class ObjectKind : std::uint8_t { Building, Grass, Tree, Stone, Barrel, Tile };
inline constexpr int kNumObjectKinds = 6;

/// File codes: B=building, G=grass, T=tree, S=stone (also "rock"), L=barrel, F=tile.
char object_code(ObjectKind kind);
ObjectKind object_from_code(char code);

enum class Action : std::uint8_t { Up, Down, Left, Right };
inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions = {Action::Up, Action::Down,
                                                                Action::Left, Action::Right};

char action_code(Action a);
Action action_from_code(char code);

/// Region type index R0..R3; also the DFA alphabet symbol.
using LabelSymbol = int;
inline constexpr int kNumRegionTypes = 4;

/// A subgoal sequence.
using Word = std::vector<LabelSymbol>;

/// Space-separated symbols; "-" for the empty word.
std::string format_word(const Word& w);
/// Parses space-separated symbols; "" and "-" both denote the empty word.
Word parse_word(std::string_view text);

struct Cell {
  int x = 0;  ///< column, 0 at the left
  int y = 0;  ///< row, 0 at the top

  auto operator<=>(const Cell&) const = default;
};

struct Transition {
  Cell cell;
  double prob = 0.0;
};

enum class InitialMode { Start, UniformUnlabeled };

/// The navigation grid. Immutable after construction; region labels are computed once.
class GridMap {
 public:
  GridMap(int width, int height, std::vector<ObjectKind> cells, std::optional<Cell> start = {},
          double slip = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_cells() const { return width_ * height_; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  int index(Cell c) const { return c.y * width_ + c.x; }
  Cell cell_at(int index) const { return {index % width_, index / width_}; }

  ObjectKind at(Cell c) const;
  const std::vector<ObjectKind>& cells() const { return cells_; }
  const std::optional<Cell>& start() const { return start_; }
  double slip() const { return slip_; }

  /// Cached region label of an in-bounds cell.
  std::optional<LabelSymbol> label(Cell c) const;
  std::optional<LabelSymbol> label_at(int index) const {
    return labels_[index] < 0 ? std::nullopt : std::optional<LabelSymbol>(labels_[index]);
  }

  GridMap with_cell(Cell c, ObjectKind kind) const;
  GridMap with_slip(double slip) const;
  GridMap with_start(std::optional<Cell> start) const;

  bool operator==(const GridMap& other) const;

 private:
  int width_;
  int height_;
  std::vector<ObjectKind> cells_;
  std::optional<Cell> start_;
  double slip_;
  std::vector<int> labels_;
};

/// Region type of the 3x3 neighborhood centered at `cell`, or nullopt for border cells and
/// irrelevant regions. Throws InputError when `cell` is out of bounds.
std::optional<LabelSymbol> region_label(const GridMap& grid, Cell cell);

/// All cells carrying a region label, in row-major order.
std::vector<Cell> labeled_cells(const GridMap& grid);

/// Deterministic move; off-grid moves stay in place.
Cell apply_move(const GridMap& grid, Cell from, Action a);

/// Successor distribution with slip; duplicate successors are merged.
std::vector<Transition> step_distribution(const GridMap& grid, Cell from, Action a);

/// Label emitted by the transition from -> to (on entry into a labeled cell).
inline std::optional<LabelSymbol> entry_label(const GridMap& grid, Cell from, Cell to) {
  if (from == to) return std::nullopt;
  return grid.label(to);
}

/// Labels emitted along a state sequence; the initial cell emits if labeled.
Word emitted_labels(const GridMap& grid, std::span<const Cell> states);

/// Initial distribution rho: point mass on the start cell, or uniform over unlabeled cells.
/// A grid without a start cell falls back to the uniform mode.
std::vector<std::pair<Cell, double>> initial_distribution(const GridMap& grid,
                                                          InitialMode mode = InitialMode::Start);

/// Random grid with `regions_per_type` pure 3x3 blocks per region type on a grass/tile
/// background. Throws GenerationError if the blocks cannot be placed.
GridMap generate_random_env(int width, int height, int regions_per_type, std::uint64_t seed);

/// Text format: "W H startX startY [slip]" then H rows of W object codes.
std::string format_grid(const GridMap& grid);
GridMap parse_grid(std::string_view text);
GridMap load_grid(const std::filesystem::path& path);
void save_grid(const GridMap& grid, const std::filesystem::path& path);

}  // namespace atig

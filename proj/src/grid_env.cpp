#include "atig/grid_env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "atig/error.hpp"
#include "atig/rng.hpp"

namespace atig {

namespace {

constexpr int kRegionThreshold = 7;  // "more than 6" of the defining object

std::optional<LabelSymbol> region_of(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Building: return 0;
    case ObjectKind::Tree: return 1;
    case ObjectKind::Barrel: return 2;
    case ObjectKind::Stone: return 3;
    default: return std::nullopt;
  }
}

constexpr std::array<ObjectKind, kNumRegionTypes> kRegionObject = {
    ObjectKind::Building, ObjectKind::Tree, ObjectKind::Barrel, ObjectKind::Stone};

std::optional<LabelSymbol> compute_label(int width, int height,
                                         const std::vector<ObjectKind>& cells, Cell c) {
  if (c.x < 1 || c.y < 1 || c.x > width - 2 || c.y > height - 2) return std::nullopt;
  std::array<int, kNumRegionTypes> counts{};
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (auto r = region_of(cells[(c.y + dy) * width + (c.x + dx)])) ++counts[*r];
    }
  }
  for (int r = 0; r < kNumRegionTypes; ++r) {
    if (counts[r] >= kRegionThreshold) return r;
  }
  return std::nullopt;
}

}  // namespace

char object_code(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Building: return 'B';
    case ObjectKind::Grass: return 'G';
    case ObjectKind::Tree: return 'T';
    case ObjectKind::Stone: return 'S';
    case ObjectKind::Barrel: return 'L';
    case ObjectKind::Tile: return 'F';
  }
  return '?';
}

ObjectKind object_from_code(char code) {
  switch (code) {
    case 'B': return ObjectKind::Building;
    case 'G': return ObjectKind::Grass;
    case 'T': return ObjectKind::Tree;
    case 'S':
    case 'R': return ObjectKind::Stone;
    case 'L': return ObjectKind::Barrel;
    case 'F': return ObjectKind::Tile;
    default: throw InputError(std::string("unknown object code '") + code + "'");
  }
}

char action_code(Action a) {
  switch (a) {
    case Action::Up: return 'U';
    case Action::Down: return 'D';
    case Action::Left: return 'L';
    case Action::Right: return 'R';
  }
  return '?';
}

Action action_from_code(char code) {
  switch (code) {
    case 'U': return Action::Up;
    case 'D': return Action::Down;
    case 'L': return Action::Left;
    case 'R': return Action::Right;
    default: throw InputError(std::string("unknown action code '") + code + "'");
  }
}

std::string format_word(const Word& w) {
  if (w.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(w[i]);
  }
  return out;
}

Word parse_word(std::string_view text) {
  Word w;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    if (tok == "-") continue;
    try {
      std::size_t used = 0;
      int v = std::stoi(tok, &used);
      if (used != tok.size() || v < 0) throw InputError("");
      w.push_back(v);
    } catch (const std::exception&) {
      throw InputError("invalid symbol '" + tok + "' in word");
    }
  }
  return w;
}

GridMap::GridMap(int width, int height, std::vector<ObjectKind> cells, std::optional<Cell> start,
                 double slip)
    : width_(width), height_(height), cells_(std::move(cells)), start_(start), slip_(slip) {
  if (width_ < 3 || height_ < 3) throw InputError("grid must be at least 3x3");
  if (static_cast<int>(cells_.size()) != width_ * height_)
    throw InputError("grid cell count does not match dimensions");
  if (start_ && !in_bounds(*start_)) throw InputError("start cell out of bounds");
  if (!(slip_ >= 0.0 && slip_ <= 1.0)) throw InputError("slip must lie in [0,1]");
  labels_.assign(cells_.size(), -1);
  for (int i = 0; i < num_cells(); ++i) {
    if (auto r = compute_label(width_, height_, cells_, cell_at(i))) labels_[i] = *r;
  }
}

ObjectKind GridMap::at(Cell c) const {
  if (!in_bounds(c)) throw InputError("cell out of bounds");
  return cells_[index(c)];
}

std::optional<LabelSymbol> GridMap::label(Cell c) const {
  if (!in_bounds(c)) throw InputError("cell out of bounds");
  return label_at(index(c));
}

GridMap GridMap::with_cell(Cell c, ObjectKind kind) const {
  if (!in_bounds(c)) throw InputError("cell out of bounds");
  auto cells = cells_;
  cells[index(c)] = kind;
  return GridMap(width_, height_, std::move(cells), start_, slip_);
}

GridMap GridMap::with_slip(double slip) const {
  return GridMap(width_, height_, cells_, start_, slip);
}

GridMap GridMap::with_start(std::optional<Cell> start) const {
  return GridMap(width_, height_, cells_, start, slip_);
}

bool GridMap::operator==(const GridMap& other) const {
  return width_ == other.width_ && height_ == other.height_ && cells_ == other.cells_ &&
         start_ == other.start_ && slip_ == other.slip_;
}

std::optional<LabelSymbol> region_label(const GridMap& grid, Cell cell) {
  if (!grid.in_bounds(cell)) throw InputError("cell out of bounds");
  return compute_label(grid.width(), grid.height(), grid.cells(), cell);
}

std::vector<Cell> labeled_cells(const GridMap& grid) {
  std::vector<Cell> out;
  for (int i = 0; i < grid.num_cells(); ++i) {
    if (grid.label_at(i)) out.push_back(grid.cell_at(i));
  }
  return out;
}

Cell apply_move(const GridMap& grid, Cell from, Action a) {
  Cell to = from;
  switch (a) {
    case Action::Up: --to.y; break;
    case Action::Down: ++to.y; break;
    case Action::Left: --to.x; break;
    case Action::Right: ++to.x; break;
  }
  return grid.in_bounds(to) ? to : from;
}

std::vector<Transition> step_distribution(const GridMap& grid, Cell from, Action a) {
  if (!grid.in_bounds(from)) throw InputError("cell out of bounds");
  std::vector<Transition> out;
  auto add = [&](Cell c, double p) {
    if (p <= 0.0) return;
    for (auto& t : out) {
      if (t.cell == c) {
        t.prob += p;
        return;
      }
    }
    out.push_back({c, p});
  };
  const double slip = grid.slip();
  add(apply_move(grid, from, a), 1.0 - slip);
  if (slip > 0.0) {
    for (Action b : kAllActions) add(apply_move(grid, from, b), slip / kNumActions);
  }
  return out;
}

Word emitted_labels(const GridMap& grid, std::span<const Cell> states) {
  Word out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!grid.in_bounds(states[i])) throw InputError("trajectory leaves the grid");
    std::optional<LabelSymbol> l =
        i == 0 ? grid.label(states[0]) : entry_label(grid, states[i - 1], states[i]);
    if (l) out.push_back(*l);
  }
  return out;
}

std::vector<std::pair<Cell, double>> initial_distribution(const GridMap& grid, InitialMode mode) {
  if (mode == InitialMode::Start && grid.start()) return {{*grid.start(), 1.0}};
  std::vector<Cell> support;
  for (int i = 0; i < grid.num_cells(); ++i) {
    if (!grid.label_at(i)) support.push_back(grid.cell_at(i));
  }
  if (support.empty()) throw InputError("grid has no unlabeled cell for the initial distribution");
  std::vector<std::pair<Cell, double>> out;
  const double p = 1.0 / static_cast<double>(support.size());
  for (Cell c : support) out.emplace_back(c, p);
  return out;
}

GridMap generate_random_env(int width, int height, int regions_per_type, std::uint64_t seed) {
  if (width < 3 || height < 3) throw InputError("grid must be at least 3x3");
  if (regions_per_type < 0) throw InputError("regions per type must be non-negative");
  constexpr int kMaxAttempts = 2000;
  const int num_blocks = regions_per_type * kNumRegionTypes;
  Rng rng = make_rng(seed);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    // Top-left corners of 3x3 blocks. Blocks keep a one-cell gap so that no window mixes
    // two same-kind blocks into a spurious region.
    std::vector<Cell> corners;
    bool ok = true;
    for (int b = 0; b < num_blocks && ok; ++b) {
      bool placed = false;
      for (int tries = 0; tries < 200 && !placed; ++tries) {
        Cell c{static_cast<int>(uniform_index(rng, width - 2)),
               static_cast<int>(uniform_index(rng, height - 2))};
        bool clash = std::any_of(corners.begin(), corners.end(), [&](Cell o) {
          return std::abs(o.x - c.x) < 4 && std::abs(o.y - c.y) < 4;
        });
        if (!clash) {
          corners.push_back(c);
          placed = true;
        }
      }
      ok = placed;
    }
    if (!ok) continue;

    std::vector<ObjectKind> cells(static_cast<std::size_t>(width) * height);
    for (auto& k : cells) k = uniform_index(rng, 2) ? ObjectKind::Tile : ObjectKind::Grass;
    std::vector<bool> in_block(cells.size(), false);
    for (int b = 0; b < num_blocks; ++b) {
      const ObjectKind kind = kRegionObject[b % kNumRegionTypes];
      for (int dy = 0; dy < 3; ++dy) {
        for (int dx = 0; dx < 3; ++dx) {
          const std::size_t i = (corners[b].y + dy) * width + (corners[b].x + dx);
          cells[i] = kind;
          in_block[i] = true;
        }
      }
    }
    std::vector<int> free_cells;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!in_block[i]) free_cells.push_back(static_cast<int>(i));
    }
    if (free_cells.empty()) continue;
    const int s = free_cells[uniform_index(rng, free_cells.size())];
    return GridMap(width, height, std::move(cells), Cell{s % width, s / width});
  }
  throw GenerationError("could not place " + std::to_string(num_blocks) + " regions in a " +
                        std::to_string(width) + "x" + std::to_string(height) + " grid");
}

std::string format_grid(const GridMap& grid) {
  std::ostringstream out;
  out << grid.width() << ' ' << grid.height() << ' ';
  if (grid.start()) {
    out << grid.start()->x << ' ' << grid.start()->y;
  } else {
    out << "-1 -1";
  }
  if (grid.slip() != 0.0) {
    out.precision(17);
    out << ' ' << grid.slip();
  }
  out << '\n';
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) out << object_code(grid.at({x, y}));
    out << '\n';
  }
  return out.str();
}

GridMap parse_grid(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header)) throw InputError("environment file: missing header line");
  std::istringstream hs(header);
  int w = 0, h = 0, sx = 0, sy = 0;
  if (!(hs >> w >> h >> sx >> sy))
    throw InputError("environment file line 1: expected 'W H startX startY'");
  double slip = 0.0;
  if (!(hs >> slip)) slip = 0.0;
  if (w < 3 || h < 3) throw InputError("environment file line 1: grid must be at least 3x3");

  std::vector<ObjectKind> cells;
  cells.reserve(static_cast<std::size_t>(w) * h);
  std::string row;
  for (int y = 0; y < h; ++y) {
    if (!std::getline(in, row))
      throw InputError("environment file: expected " + std::to_string(h) + " rows, got " +
                       std::to_string(y));
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (static_cast<int>(row.size()) != w)
      throw InputError("environment file line " + std::to_string(y + 2) + ": expected " +
                       std::to_string(w) + " cells");
    for (char c : row) {
      try {
        cells.push_back(object_from_code(c));
      } catch (const InputError& e) {
        throw InputError("environment file line " + std::to_string(y + 2) + ": " + e.what());
      }
    }
  }
  std::optional<Cell> start;
  if (sx >= 0 || sy >= 0) start = Cell{sx, sy};
  return GridMap(w, h, std::move(cells), start, slip);
}

GridMap load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open environment file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

void save_grid(const GridMap& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write environment file " + path.string());
  out << format_grid(grid);
}

}  // namespace atig

#include "transfer.hpp"

#include "error.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

namespace anisonet {

TransferAssignment assign_nodes(const TetMesh& comp_mesh, const TetMesh& bg_mesh) {
  const PointLocator locator(bg_mesh);
  const auto patches = build_node_patches(bg_mesh);

  TransferAssignment out;
  out.location.reserve(comp_mesh.num_nodes());
  std::vector<std::vector<int>> lists(bg_mesh.num_nodes());
  std::vector<int> support;
  std::vector<int> owners;
  int seed = 0;
  for (std::size_t j = 0; j < comp_mesh.num_nodes(); ++j) {
    const PointLocation loc = locator.locate(comp_mesh.nodes[j], seed);
    seed = loc.elem;
    out.location.push_back(loc);
    const Tet& tet = bg_mesh.tets[loc.elem];
    owners.clear();
    if (loc.exterior) {
      ++out.orphan_count;
      owners.assign(tet.begin(), tet.end());
    } else {
      support.clear();
      for (int k = 0; k < 4; ++k)
        if (loc.bary[k] > kBaryTolerance) support.push_back(tet[k]);
      for (int t : patches[support.front()].elems) {
        const Tet& cand = bg_mesh.tets[t];
        const bool touches = std::all_of(support.begin(), support.end(), [&](int v) {
          return std::find(cand.begin(), cand.end(), v) != cand.end();
        });
        if (touches) owners.insert(owners.end(), cand.begin(), cand.end());
      }
    }
    std::sort(owners.begin(), owners.end());
    owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
    for (int v : owners) lists[v].push_back(static_cast<int>(j));
  }

  out.patch_offsets.assign(bg_mesh.num_nodes() + 1, 0);
  for (std::size_t i = 0; i < lists.size(); ++i) out.patch_offsets[i + 1] = out.patch_offsets[i] + lists[i].size();
  out.patch_members.reserve(out.patch_offsets.back());
  for (const auto& l : lists) out.patch_members.insert(out.patch_members.end(), l.begin(), l.end());
  return out;
}

std::string TransferReport::to_text() const {
  std::ostringstream out;
  out << "transfer report\n"
      << "background_nodes " << background_nodes << '\n'
      << "computational_nodes " << computational_nodes << '\n'
      << "empty_patches " << empty_patches << '\n'
      << "orphan_nodes " << orphan_nodes << '\n'
      << "exterior_background_nodes " << exterior_background_nodes << '\n';
  for (int id : exterior_background_ids) out << "exterior_background_node " << id << '\n';
  return out.str();
}

namespace {

template <class Value, class Combine>
std::vector<Value> fold_patches(std::span<const Value> comp_values, const TransferAssignment& assignment,
                                const TetMesh& bg_mesh, const TetMesh& comp_mesh, TransferReport* report,
                                Combine combine) {
  if (comp_values.size() != comp_mesh.num_nodes() || assignment.location.size() != comp_mesh.num_nodes())
    throw InvalidArgument("computational field, assignment and mesh sizes disagree");
  if (assignment.patch_offsets.size() != bg_mesh.num_nodes() + 1)
    throw InvalidArgument("assignment does not match the background mesh");

  TransferReport rep;
  rep.background_nodes = bg_mesh.num_nodes();
  rep.computational_nodes = comp_mesh.num_nodes();
  rep.orphan_nodes = assignment.orphan_count;

  std::unique_ptr<PointLocator> comp_locator;
  int seed = 0;
  std::vector<Value> out;
  out.reserve(bg_mesh.num_nodes());
  for (std::size_t i = 0; i < bg_mesh.num_nodes(); ++i) {
    const auto members = assignment.members(i);
    if (!members.empty()) {
      Value acc = comp_values[members[0]];
      for (std::size_t k = 1; k < members.size(); ++k) acc = combine(acc, comp_values[members[k]]);
      out.push_back(acc);
      continue;
    }
    ++rep.empty_patches;
    if (!comp_locator) comp_locator = std::make_unique<PointLocator>(comp_mesh);
    const PointLocation loc = comp_locator->locate(bg_mesh.nodes[i], seed);
    seed = loc.elem;
    if (loc.exterior) {
      ++rep.exterior_background_nodes;
      rep.exterior_background_ids.push_back(static_cast<int>(i));
    }
    Tet verts = comp_mesh.tets[loc.elem];
    std::sort(verts.begin(), verts.end());
    Value acc = comp_values[verts[0]];
    for (int k = 1; k < 4; ++k) acc = combine(acc, comp_values[verts[k]]);
    out.push_back(acc);
  }
  if (report) *report = std::move(rep);
  return out;
}

} // namespace

MetricField transfer_metric(const MetricField& comp_field, const TransferAssignment& assignment,
                            const TetMesh& bg_mesh, const TetMesh& comp_mesh, TransferReport* report) {
  return fold_patches<Metric>(comp_field, assignment, bg_mesh, comp_mesh, report,
                              [](const Metric& a, const Metric& b) { return intersect_pair(a, b); });
}

std::vector<double> transfer_isotropic(std::span<const double> comp_spacing, const TransferAssignment& assignment,
                                       const TetMesh& bg_mesh, const TetMesh& comp_mesh, TransferReport* report) {
  return fold_patches<double>(comp_spacing, assignment, bg_mesh, comp_mesh, report,
                              [](double a, double b) { return std::min(a, b); });
}

} // namespace anisonet

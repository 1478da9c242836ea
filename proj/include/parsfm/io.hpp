#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "parsfm/clustering.hpp"
#include "parsfm/graph.hpp"
#include "parsfm/reconstruction.hpp"
#include "parsfm/simulator.hpp"

namespace parsfm {

// Match graph: UTF-8 text, one edge per line "id_a id_b weight", '#' comments.
WeightedGraph read_match_graph(const std::filesystem::path& path);
void write_match_graph(const std::filesystem::path& path, const WeightedGraph& g);

// Clusters: JSON list of {cluster_id, images:[ids]}.
ClusterSet read_clusters(const std::filesystem::path& path);
void write_clusters(const std::filesystem::path& path, const ClusterSet& cs);

// Reconstruction: JSON {cluster_id?, frame?, cameras:[{image_id, q:[w,x,y,z],
// C:[x,y,z]}], points:[{id, xyz:[...], obs:[ids]}]}. Scenes share the format.
LocalReconstruction read_reconstruction(const std::filesystem::path& path);
void write_reconstruction(const std::filesystem::path& path,
                          const LocalReconstruction& rec);

GroundTruthScene read_scene(const std::filesystem::path& path);
void write_scene(const std::filesystem::path& path, const GroundTruthScene& scene);

}  // namespace parsfm

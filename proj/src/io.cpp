#include "parsfm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "parsfm/error.hpp"

namespace parsfm {

using nlohmann::json;

namespace {

std::string loc(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// Shortest round-trip decimal; integral weights print without a fraction.
std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json parse_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return j;
}

void dump_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

Eigen::Vector3d to_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw IoError(where + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json from_vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

CameraPose camera_from_json(const json& j, const std::string& where) {
  if (!j.contains("image_id") || !j.contains("q") || !j.contains("C")) {
    throw IoError(where + ": camera needs image_id, q, C");
  }
  const json& q = j["q"];
  if (!q.is_array() || q.size() != 4) throw IoError(where + ".q: expected 4 numbers");
  const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                q[3].get<double>());
  if (std::abs(quat.norm() - 1.0) > 1e-9) {
    throw IoError(where + ".q: quaternion is not unit-norm");
  }
  return CameraPose(j["image_id"].get<ImageId>(), quat, to_vec3(j["C"], where + ".C"));
}

json camera_to_json(const CameraPose& cam) {
  return json{{"image_id", cam.image_id},
              {"q", json::array({cam.q.w(), cam.q.x(), cam.q.y(), cam.q.z()})},
              {"C", from_vec3(cam.C)}};
}

LocalReconstruction reconstruction_from_json(const json& j,
                                             const std::filesystem::path& path) {
  LocalReconstruction rec;
  if (j.contains("cluster_id")) rec.cluster_id = j["cluster_id"].get<int>();
  if (j.contains("frame")) rec.frame = j["frame"].get<std::string>();
  if (!j.contains("cameras") || !j["cameras"].is_array()) {
    throw IoError(path.string() + ": missing cameras array");
  }
  std::size_t idx = 0;
  std::set<ImageId> seen;
  for (const json& cj : j["cameras"]) {
    const std::string where = path.string() + ": cameras[" + std::to_string(idx++) + "]";
    CameraPose cam = camera_from_json(cj, where);
    if (!seen.insert(cam.image_id).second) {
      throw IoError(where + ": duplicate image_id " + std::to_string(cam.image_id));
    }
    rec.cameras.push_back(std::move(cam));
  }
  if (j.contains("points")) {
    idx = 0;
    for (const json& pj : j["points"]) {
      const std::string where = path.string() + ": points[" + std::to_string(idx++) + "]";
      Point3D p;
      if (!pj.contains("id") || !pj.contains("xyz")) {
        throw IoError(where + ": point needs id and xyz");
      }
      p.id = pj["id"].get<PointId>();
      p.xyz = to_vec3(pj["xyz"], where + ".xyz");
      if (pj.contains("obs")) p.observations = pj["obs"].get<std::vector<ImageId>>();
      rec.points.push_back(std::move(p));
    }
  }
  return rec;
}

json reconstruction_to_json(const LocalReconstruction& rec, bool with_cluster_id) {
  json j;
  if (with_cluster_id) j["cluster_id"] = rec.cluster_id;
  if (!rec.frame.empty()) j["frame"] = rec.frame;
  json cams = json::array();
  for (const auto& c : rec.cameras) cams.push_back(camera_to_json(c));
  j["cameras"] = std::move(cams);
  json pts = json::array();
  for (const auto& p : rec.points) {
    pts.push_back(json{{"id", p.id}, {"xyz", from_vec3(p.xyz)}, {"obs", p.observations}});
  }
  j["points"] = std::move(pts);
  return j;
}

}  // namespace

WeightedGraph read_match_graph(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  WeightedGraph g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    ImageId a, b;
    double w;
    if (!(is >> a)) continue;  // blank or comment-only line
    if (!(is >> b >> w)) {
      throw IoError(loc(path, lineno) + ": expected 'id_a id_b weight'");
    }
    std::string trailing;
    if (is >> trailing) {
      throw IoError(loc(path, lineno) + ": trailing content '" + trailing + "'");
    }
    try {
      g.add_edge(a, b, w);
    } catch (const std::invalid_argument& e) {
      throw IoError(loc(path, lineno) + ": " + e.what());
    }
  }
  return g;
}

void write_match_graph(const std::filesystem::path& path, const WeightedGraph& g) {
  std::ofstream out = open_out(path);
  out << "# match graph: id_a id_b weight\n";
  for (const Edge& e : g.edges()) {
    out << e.a << " " << e.b << " " << format_number(e.weight) << "\n";
  }
}

ClusterSet read_clusters(const std::filesystem::path& path) {
  const json j = parse_json(path);
  if (!j.is_array()) throw IoError(path.string() + ": expected a JSON array");
  std::map<int, std::set<NodeId>> ordered;
  for (const json& cj : j) {
    if (!cj.contains("cluster_id") || !cj.contains("images")) {
      throw IoError(path.string() + ": cluster entry needs cluster_id and images");
    }
    const int id = cj["cluster_id"].get<int>();
    if (ordered.count(id)) {
      throw IoError(path.string() + ": duplicate cluster_id " + std::to_string(id));
    }
    auto& set = ordered[id];
    for (const json& img : cj["images"]) set.insert(img.get<NodeId>());
  }
  ClusterSet cs;
  for (auto& [id, set] : ordered) cs.clusters.push_back(std::move(set));
  return cs;
}

void write_clusters(const std::filesystem::path& path, const ClusterSet& cs) {
  json j = json::array();
  for (int i = 0; i < static_cast<int>(cs.clusters.size()); ++i) {
    j.push_back(json{{"cluster_id", i},
                     {"images", std::vector<NodeId>(cs.clusters[i].begin(),
                                                    cs.clusters[i].end())}});
  }
  dump_json(path, j);
}

LocalReconstruction read_reconstruction(const std::filesystem::path& path) {
  return reconstruction_from_json(parse_json(path), path);
}

void write_reconstruction(const std::filesystem::path& path,
                          const LocalReconstruction& rec) {
  dump_json(path, reconstruction_to_json(rec, true));
}

GroundTruthScene read_scene(const std::filesystem::path& path) {
  const json j = parse_json(path);
  LocalReconstruction rec = reconstruction_from_json(j, path);
  GroundTruthScene scene;
  scene.cameras = std::move(rec.cameras);
  scene.points.reserve(rec.points.size());
  for (const auto& p : rec.points) scene.points.push_back(p.xyz);
  if (j.contains("layout")) scene.layout = parse_layout(j["layout"].get<std::string>());
  if (j.contains("seed")) scene.seed = j["seed"].get<std::uint64_t>();
  std::vector<Eigen::Vector3d> centers;
  for (const auto& c : scene.cameras) centers.push_back(c.C);
  scene.diameter = bounding_diameter(centers);
  return scene;
}

void write_scene(const std::filesystem::path& path, const GroundTruthScene& scene) {
  LocalReconstruction rec;
  rec.cameras = scene.cameras;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    rec.points.push_back(Point3D{static_cast<PointId>(i), scene.points[i], {}});
  }
  json j = reconstruction_to_json(rec, false);
  j["layout"] = layout_name(scene.layout);
  j["seed"] = scene.seed;
  dump_json(path, j);
}

}  // namespace parsfm

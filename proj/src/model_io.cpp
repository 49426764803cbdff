#include "pbmv/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pbmv {

namespace {

using nlohmann::json;

json node_to_json(const std::vector<TreeNode>& nodes, std::int32_t at) {
  const TreeNode& node = nodes[at];
  if (node.is_leaf()) return json{{"leaf", node.label}};
  return json{{"feature", node.feature},
              {"threshold", node.threshold},
              {"left", node_to_json(nodes, node.left)},
              {"right", node_to_json(nodes, node.right)}};
}

std::int32_t node_from_json(const json& doc, std::vector<TreeNode>& nodes, int depth) {
  const std::int32_t at = std::int32_t(nodes.size());
  nodes.push_back(TreeNode{});
  if (doc.contains("leaf")) {
    const int label = doc.at("leaf").get<int>();
    if (label != -1 && label != 1) throw InputError("model: leaf label not in {-1,+1}");
    nodes[at].label = label;
    return at;
  }
  if (depth <= 0) throw InputError("model: tree deeper than declared depth");
  nodes[at].feature = doc.at("feature").get<std::int32_t>();
  nodes[at].threshold = doc.at("threshold").get<double>();
  if (nodes[at].feature < 0) throw InputError("model: negative feature index");
  const std::int32_t left = node_from_json(doc.at("left"), nodes, depth - 1);
  const std::int32_t right = node_from_json(doc.at("right"), nodes, depth - 1);
  nodes[at].left = left;
  nodes[at].right = right;
  return at;
}

std::string weighting_name(VoterWeighting w) {
  return w == VoterWeighting::posterior ? "posterior" : "uniform";
}

VoterWeighting weighting_from_name(const std::string& name) {
  if (name == "posterior") return VoterWeighting::posterior;
  if (name == "uniform") return VoterWeighting::uniform;
  throw InputError("model: unknown voter weighting '" + name + "'");
}

std::string rho_update_name(RhoUpdate r) {
  return r == RhoUpdate::margin_global ? "margin-global" : "cbound-simplex";
}

RhoUpdate rho_update_from_name(const std::string& name) {
  if (name == "margin-global") return RhoUpdate::margin_global;
  if (name == "cbound-simplex") return RhoUpdate::cbound_simplex;
  throw InputError("model: unknown rho update '" + name + "'");
}

}  // namespace

std::string model_to_json(const MVMajorityVote& model) {
  model.validate();
  json doc;
  doc["format"] = 1;
  doc["algorithm"] = model.algorithm;
  doc["config"] = {{"iterations", model.config.iterations},
                   {"depth", model.config.max_depth},
                   {"seed", model.config.seed},
                   {"voter_weighting", weighting_name(model.config.voter_weighting)},
                   {"rho_update", rho_update_name(model.config.rho_update)}};
  doc["rho"] = model.rho.rho;
  doc["view_names"] = model.view_names;
  json views = json::array();
  for (const ViewPosterior& post : model.per_view) {
    json view;
    view["q_weights"] = std::vector<double>(post.q_weights().begin(), post.q_weights().end());
    json voters = json::array();
    for (const WeakVoter& voter : post.voters()) voters.push_back(node_to_json(voter.nodes(), 0));
    view["voters"] = std::move(voters);
    views.push_back(std::move(view));
  }
  doc["views"] = std::move(views);
  return doc.dump(2) + "\n";
}

MVMajorityVote model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("model: bad JSON: ") + e.what());
  }
  try {
    if (!doc.contains("format") || doc.at("format").get<int>() != 1)
      throw InputError("model: unsupported format (expected \"format\": 1)");

    MVMajorityVote model;
    model.algorithm = doc.at("algorithm").get<std::string>();
    const json& config = doc.at("config");
    model.config.iterations = config.at("iterations").get<std::size_t>();
    model.config.max_depth = config.at("depth").get<int>();
    model.config.seed = config.at("seed").get<std::uint64_t>();
    model.config.voter_weighting =
        weighting_from_name(config.at("voter_weighting").get<std::string>());
    model.config.rho_update = rho_update_from_name(config.at("rho_update").get<std::string>());
    model.iterations = model.config.iterations;
    model.rho = SimplexWeights{doc.at("rho").get<std::vector<double>>()};
    if (doc.contains("view_names"))
      model.view_names = doc.at("view_names").get<std::vector<std::string>>();

    std::size_t view_index = 0;
    for (const json& view : doc.at("views")) {
      std::vector<double> q = view.at("q_weights").get<std::vector<double>>();
      std::vector<WeakVoter> voters;
      for (const json& tree : view.at("voters")) {
        std::vector<TreeNode> nodes;
        node_from_json(tree, nodes, model.config.max_depth);
        voters.emplace_back(view_index, model.config.max_depth, std::move(nodes));
      }
      model.per_view.emplace_back(std::move(voters), std::move(q));
      ++view_index;
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw InputError(std::string("model: missing or mistyped field: ") + e.what());
  }
}

void save_model(const MVMajorityVote& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file: " + path.string());
  out << model_to_json(model);
  if (!out) throw InputError("failed writing model file: " + path.string());
}

MVMajorityVote load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(std::move(buf).str());
}

}  // namespace pbmv

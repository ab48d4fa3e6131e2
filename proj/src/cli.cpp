#include "upbkit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "upbkit/filtering.hpp"
#include "upbkit/graphs.hpp"
#include "upbkit/json_io.hpp"
#include "upbkit/qutrit.hpp"
#include "upbkit/search.hpp"
#include "upbkit/upb.hpp"

namespace upbkit::cli {

namespace {

using json_io::json;

constexpr std::uint64_t kDefaultSeed = 20240601;

struct RunConfig {
  std::string command;
  std::string upb;
  std::string a;
  std::string b;
  std::string upb_file;
  std::string which;
  std::string target = "complement";
  std::string partition = "tripartite";
  std::string format = "json";
  std::string out;
  std::uint64_t seed = kDefaultSeed;
  double tol = 1e-9;
  int grid = 0;  // 0: per-dimension default
  int restarts = 200;
  int budget = 5000;
  double slack = 1e-9;
  int threads = 1;
  int realize = 0;

  json to_json() const {
    json inputs = json::object();
    if (!upb.empty()) inputs["upb"] = upb;
    if (!a.empty()) inputs["a"] = a;
    if (!b.empty()) inputs["b"] = b;
    if (!upb_file.empty()) inputs["upb_file"] = upb_file;
    if (!which.empty()) inputs["which"] = which;
    return {{"command", command}, {"inputs", inputs},     {"target", target},   {"partition", partition},
            {"format", format},   {"seed", seed},         {"tol", tol},         {"grid", grid},
            {"restarts", restarts}, {"budget", budget},   {"slack", slack},     {"threads", threads},
            {"realize", realize}};
  }
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Upb parse_upb_spec(const std::string& spec) {
  if (spec.empty()) throw UsageError("missing UPB specification");
  const std::string prefix = "canonical:";
  if (spec.rfind(prefix, 0) == 0) {
    std::vector<double> angles;
    std::stringstream ss(spec.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        throw UsageError("bad angle in " + spec);
      }
      if (used != item.size()) throw UsageError("bad angle in " + spec);
      angles.push_back(v);
    }
    if (angles.size() != 3) throw UsageError("canonical shorthand needs three angles: " + spec);
    return build_canonical(CanonicalAngles::make(angles[0], angles[1], angles[2]));
  }
  return load_upb_file(spec);
}

search::SearchConfig search_config(const RunConfig& rc, const Dims& dims) {
  auto c = search::SearchConfig::for_dims(dims);
  if (rc.grid > 0) c.grid = rc.grid;
  c.tolerance = rc.tol;
  c.seed = rc.seed;
  c.threads = rc.threads;
  c.check();
  return c;
}

search::Partition parse_partition(const std::string& name, int parties) {
  if (name == "tripartite" || name == "each") return search::Partition::each_party(parties);
  if (parties == 3) {
    if (name == "A|BC") return search::Partition::bipartite({0}, 3);
    if (name == "B|AC") return search::Partition::bipartite({1}, 3);
    if (name == "C|AB") return search::Partition::bipartite({2}, 3);
  }
  throw UsageError("unknown partition: " + name);
}

json hit_json(const search::ProductVectorHit& h) {
  json factors = json::array();
  for (const auto& f : h.factors) factors.push_back(json_io::to_json(f));
  return {{"factors", factors}, {"residual", h.residual}};
}

json hits_json(const std::vector<search::ProductVectorHit>& hits) {
  json out = json::array();
  for (const auto& h : hits) out.push_back(hit_json(h));
  return out;
}

json graph_json(const graphs::PartyGraph& g) {
  json edges = json::array();
  for (auto [i, j] : g.edges()) edges.push_back({i + 1, j + 1});
  return edges;
}

json witness_json(const EquivalenceWitness& w) {
  json u = json::array();
  for (const auto& m : w.unitaries) u.push_back(json_io::matrix_to_json(m));
  std::vector<int> perm;
  for (int p : w.permutation) perm.push_back(p + 1);
  return {{"permutation", perm}, {"unitaries", u}, {"max_error", w.max_error}};
}

struct Outcome {
  json report;
  int code = Success;
};

Outcome cmd_build(const RunConfig& rc) {
  const Upb upb = parse_upb_spec(rc.upb);
  const auto c = canonicalize(upb);
  return {{{"upb", upb_to_json(upb)}, {"angles", c.angles.as_array()}, {"orthonormality_error", upb.orthonormality_error()}}};
}

Outcome cmd_validate(const RunConfig& rc) {
  const Upb upb = parse_upb_spec(rc.upb.empty() ? rc.upb_file : rc.upb);
  const auto r = validate(upb, search_config(rc, upb.dims()));
  json g = json::array();
  for (const auto& pg : r.graphs) g.push_back(graph_json(pg));
  json report = {{"orthonormality_error", r.orthonormality_error},
                 {"productness_error", r.productness_error},
                 {"orthonormal", r.orthonormal},
                 {"unextendible", r.unextendible},
                 {"extension", r.extension ? hit_json(*r.extension) : json(nullptr)},
                 {"graphs", g},
                 {"valid", r.ok()}};
  return {report, r.ok() ? Success : Negative};
}

Outcome cmd_state(const RunConfig& rc) {
  const Upb upb = parse_upb_spec(rc.upb.empty() ? rc.upb_file : rc.upb);
  const auto rho = state_of(upb);
  return {{{"rho", json_io::matrix_to_json(rho.matrix())},
           {"eigenvalues", json_io::to_json(linalg::eigh(rho.matrix()).values)},
           {"normal_form_residual", normal_form_residual(rho)}}};
}

Outcome cmd_equiv(const RunConfig& rc) {
  const Upb s = parse_upb_spec(rc.a);
  const Upb t = parse_upb_spec(rc.b);
  const auto cs = canonicalize(s);
  const auto ct = canonicalize(t);
  const auto w = equivalent(s, t);
  json report = {{"result", w ? "equivalent" : "inequivalent"},
                 {"angles_a", cs.angles.as_array()},
                 {"angles_b", ct.angles.as_array()},
                 {"angle_difference", cs.angles.max_difference(ct.angles)},
                 {"witness", w ? witness_json(*w) : json(nullptr)}};
  return {report, w ? Success : Negative};
}

std::string labels_of(const graphs::EdgeColoring& c) {
  std::string out;
  for (auto p : c.labels) out += graphs::party_name(p);
  return out;
}

Outcome cmd_graphs(const RunConfig& rc) {
  const auto classes = graphs::enumerate_valid_party_graphs(5, 4);
  const auto scan = graphs::enumerate_colorings(rc.threads);
  std::vector<int> per_class(classes.size(), 0);
  int unmatched = 0, without_heavy = 0;
  for (const auto& s : scan.survivors) {
    if (s.heavy_parties.empty()) ++without_heavy;
    for (auto p : s.heavy_parties) {
      const auto g = s.coloring.party_graph(p);
      bool found = false;
      for (std::size_t k = 0; k < classes.size(); ++k)
        if (graphs::isomorphic(g, classes[k])) {
          ++per_class[k];
          found = true;
        }
      if (!found) ++unmatched;
    }
  }
  json cls = json::array();
  for (std::size_t k = 0; k < classes.size(); ++k)
    cls.push_back({{"edges", graph_json(classes[k])}, {"description", graphs::describe(classes[k])},
                   {"heavy_occurrences", per_class[k]}});

  json survivors = json::array();
  int realizable = 0;
  bool all_extendible = true;
  for (const auto& sc : graphs::survivor_classes(scan)) {
    const auto forced = graphs::forced_orthogonal_pairs(sc.representative);
    json entry = {{"coloring", labels_of(sc.representative)}, {"members", sc.members}, {"realizable", forced.empty()}};
    if (!forced.empty()) {
      const auto& f = forced.front();
      entry["forced_orthogonal"] = {{"party", std::string(1, graphs::party_name(f.party))}, {"pair", {f.i + 1, f.j + 1}}};
    } else {
      ++realizable;
      if (rc.realize > 0) {
        int realized = 0, extendible = 0;
        double worst = 0.0;
        for (int r = 0; r < rc.realize; ++r) {
          const auto members = graphs::realize_coloring(sc.representative, rc.seed + static_cast<std::uint64_t>(r));
          if (!members) continue;
          ++realized;
          auto config = search::SearchConfig::for_dims({2, 2, 2});
          config.seed = rc.seed;
          if (const auto hit = search::is_extendible(*members, config)) {
            ++extendible;
            worst = std::max(worst, hit->residual);
          }
        }
        all_extendible = all_extendible && realized == rc.realize && extendible == realized;
        entry["realizations"] = {{"attempts", rc.realize}, {"realized", realized}, {"extendible", extendible},
                                 {"worst_residual", worst}};
      }
    }
    survivors.push_back(entry);
  }
  json report = {{"scanned", scan.scanned},
                 {"survivors", scan.survivors.size()},
                 {"survivors_without_heavy_party", without_heavy},
                 {"heavy_graphs_outside_classes", unmatched},
                 {"heavy_classes", cls},
                 {"survivor_classes", survivors},
                 {"realizable_survivor_classes", realizable}};
  const bool ok = scan.scanned == 59049 && without_heavy == 0 && unmatched == 0 && classes.size() == 2 && all_extendible;
  return {report, ok ? Success : Negative};
}

Outcome cmd_search(const RunConfig& rc) {
  const Upb upb = parse_upb_spec(rc.upb.empty() ? rc.upb_file : rc.upb);
  if (rc.target != "span" && rc.target != "complement") throw UsageError("--target must be span or complement");
  const auto subspace = rc.target == "span" ? upb.span() : upb.complement();
  const auto partition = parse_partition(rc.partition, upb.parties());
  const auto hits = search::find_product_vectors(subspace, partition, search_config(rc, upb.dims()));
  return {{{"subspace_dimension", subspace.dimension()}, {"count", hits.size()}, {"hits", hits_json(hits)}}};
}

Outcome cmd_certify(const RunConfig& rc) {
  const Upb s = parse_upb_spec(rc.a);
  const Upb t = parse_upb_spec(rc.b);
  if (equivalent(s, t)) throw UsageError("the two UPBs are equivalent; a gap certificate is undefined");
  filtering::OptimizerConfig oc;
  oc.restarts = rc.restarts;
  oc.seed = rc.seed;
  oc.budget = rc.budget;
  oc.slack = rc.slack;
  oc.threads = rc.threads;
  const auto cert = filtering::certify_gap(s, t, oc);
  return {filtering::to_json(cert), cert.consistent && cert.chain_holds() ? Success : Negative};
}

Outcome cmd_qutrit(const RunConfig& rc) {
  std::string path = rc.upb_file;
  if (path.empty()) {
    if (rc.which == "tiles" || rc.which == "pyramid") path = qutrit::data_path(rc.which + ".json");
    else throw UsageError("qutrit-extras needs --upb-file or --which tiles|pyramid");
  }
  const Upb upb = load_upb_file(path);
  const auto config = search_config(rc, upb.dims());
  const auto all = qutrit::span_product_vectors(upb, config);
  json extras = json::array();
  int extra_count = 0;
  for (const auto& h : all) {
    bool member = false;
    for (const auto& m : upb.members())
      if (search::same_product_vector(h.factors, m.factors(), config.dedup)) member = true;
    if (!member) {
      extras.push_back(hit_json(h));
      ++extra_count;
    }
  }
  return {{{"members", upb.size()}, {"span_product_vectors", all.size()}, {"extra_count", extra_count},
           {"extras", extras}}};
}

void render_text(const json& j, std::ostream& out, const std::string& indent = "") {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_object()) {
      out << indent << it.key() << ":\n";
      render_text(*it, out, indent + "  ");
    } else {
      out << indent << it.key() << ": " << it->dump() << "\n";
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Three-qubit UPB toolkit: construction, equivalence, product-vector search and filtering gaps"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");

  app.add_option("--format", rc.format, "Report format")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--out", rc.out, "Write the report to this path instead of stdout");
  app.add_option("--seed", rc.seed, "Random seed");
  app.add_option("--tol", rc.tol, "Product-vector residual tolerance")->check(CLI::Range(1e-15, 1e-2));
  app.add_option("--grid", rc.grid, "Search grid points per angle (>= 8)")->check(CLI::Range(8, 256));
  app.add_option("--restarts", rc.restarts, "Optimizer restarts")->check(CLI::Range(1, 100000));
  app.add_option("--budget", rc.budget, "Evaluations per restart")->check(CLI::Range(10, 10000000));
  app.add_option("--slack", rc.slack, "Consistency slack")->check(CLI::Range(0.0, 1.0));
  app.add_option("--threads", rc.threads, "Worker threads (0: hardware)")->check(CLI::Range(0, 1024));
  app.add_option("--upb-file", rc.upb_file, "UPB document path");

  auto* build = app.add_subcommand("build", "Canonical UPB from angles");
  build->add_option("upb", rc.upb, "canonical:a,b,c")->required();
  auto* val = app.add_subcommand("validate", "Orthonormality, unextendibility, orthogonality graphs");
  val->add_option("upb", rc.upb, "UPB file or canonical:a,b,c");
  auto* state = app.add_subcommand("state", "Bound entangled state of a UPB");
  state->add_option("upb", rc.upb, "UPB file or canonical:a,b,c");
  auto* equiv = app.add_subcommand("equiv", "Local-unitary equivalence of two three-qubit UPBs");
  equiv->add_option("--a", rc.a, "First UPB")->required();
  equiv->add_option("--b", rc.b, "Second UPB")->required();
  auto* gr = app.add_subcommand("graphs", "Orthogonality-graph enumeration for five-member families");
  gr->add_option("--realize", rc.realize, "Realizations per class")->check(CLI::Range(0, 1000));
  auto* sp = app.add_subcommand("search-pv", "Product vectors in a UPB span or complement");
  sp->add_option("upb", rc.upb, "UPB file or canonical:a,b,c");
  sp->add_option("--target", rc.target, "span or complement");
  sp->add_option("--partition", rc.partition, "tripartite, A|BC, B|AC or C|AB");
  auto* cert = app.add_subcommand("certify", "Empirical non-convertibility gap certificate");
  cert->add_option("--a", rc.a, "Source UPB")->required();
  cert->add_option("--b", rc.b, "Target UPB")->required();
  auto* qt = app.add_subcommand("qutrit-extras", "Extra product vectors in a two-qutrit UPB span");
  qt->add_option("--which", rc.which, "tiles or pyramid");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return Success;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return Success;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return Usage;
  }
  rc.command = app.get_subcommands().front()->get_name();

  Outcome outcome;
  try {
    if (rc.command == "build") outcome = cmd_build(rc);
    else if (rc.command == "validate") outcome = cmd_validate(rc);
    else if (rc.command == "state") outcome = cmd_state(rc);
    else if (rc.command == "equiv") outcome = cmd_equiv(rc);
    else if (rc.command == "graphs") outcome = cmd_graphs(rc);
    else if (rc.command == "search-pv") outcome = cmd_search(rc);
    else if (rc.command == "certify") outcome = cmd_certify(rc);
    else outcome = cmd_qutrit(rc);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return Usage;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return Usage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return Numerical;
  }

  json report = {{"schema", 1}, {"config", rc.to_json()}, {"exit_code", outcome.code}, {"report", outcome.report}};
  std::ostringstream text;
  if (rc.format == "json") text << report.dump(2) << "\n";
  else render_text(report, text);

  if (rc.out.empty()) {
    out << text.str();
  } else {
    std::ofstream f(rc.out, std::ios::binary);
    if (!f) {
      err << "usage error: cannot write " << rc.out << "\n";
      return Usage;
    }
    f << text.str();
  }
  return outcome.code;
}

}  // namespace upbkit::cli

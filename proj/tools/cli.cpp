#include "cli.hpp"

#include <pthread.h>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "telecomrag/chain.hpp"
#include "telecomrag/config.hpp"
#include "telecomrag/errors.hpp"
#include "telecomrag/eval.hpp"
#include "telecomrag/history.hpp"
#include "telecomrag/knowledge_base.hpp"
#include "telecomrag/service.hpp"

namespace telecomrag::cli {
namespace {

namespace fs = std::filesystem;

// Raised for problems the operator can fix by changing flags or files.
class UsageError : public Error {
 public:
  using Error::Error;
};

ServiceConfig base_config(const std::string& path) {
  if (path.empty()) return {};
  try {
    return load_config(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::shared_ptr<const KnowledgeBase> open_index(const fs::path& dir) {
  if (dir.empty()) throw UsageError("no index directory: pass --index or set index_dir in --config");
  if (!fs::exists(dir / "index.meta.json")) throw UsageError("no index found in " + dir.string());
  try {
    return std::make_shared<const KnowledgeBase>(KnowledgeBase::load(dir));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError("cannot load index " + dir.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string config;
  std::string corpus;
  std::string out;
  std::string embedder;
  std::optional<std::size_t> dim;
  std::string embed_url;
  std::string embed_model;
  std::optional<std::size_t> chunk_size;
  std::optional<std::size_t> overlap;
  bool no_snap = false;
  bool strict = false;
  std::vector<std::string> extensions;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  const ServiceConfig cfg = base_config(a.config);
  IngestOptions opts;
  if (cfg.embedder) opts.embedder = *cfg.embedder;
  if (!a.embedder.empty()) opts.embedder.kind = embed::embedder_kind_from_string(a.embedder);
  if (a.dim) opts.embedder.dim = *a.dim;
  if (!a.embed_url.empty()) opts.embedder.base_url = a.embed_url;
  if (!a.embed_model.empty()) opts.embedder.model_name = a.embed_model;
  if (a.chunk_size) opts.chunking.chunk_size = *a.chunk_size;
  if (a.overlap) opts.chunking.overlap = *a.overlap;
  if (a.no_snap) opts.chunking.snap_to_whitespace = false;
  if (!a.extensions.empty()) {
    opts.extensions.clear();
    for (std::string ext : a.extensions) {
      if (!ext.empty() && ext.front() != '.') ext.insert(ext.begin(), '.');
      opts.extensions.insert(ext);
    }
  }
  opts.chunking.validate();
  opts.embedder.validate();

  out << "chunk_size=" << opts.chunking.chunk_size << " overlap=" << opts.chunking.overlap
      << " snap=" << (opts.chunking.snap_to_whitespace ? "on" : "off") << " embedder=" << to_string(opts.embedder.kind);
  if (opts.embedder.kind == embed::EmbedderKind::kHash) out << " dim=" << opts.embedder.dim;
  out << "\n";

  const IngestReport report = ingest_directory(a.corpus, a.out, opts);
  for (const auto& e : report.errors) err << "skipped " << e.path.string() << ": " << e.message << "\n";
  out << "documents=" << report.documents << " chunks=" << report.chunks << " skipped=" << report.errors.size()
      << "\n";
  out << "index written to " << a.out << "\n";
  return a.strict && !report.errors.empty() ? kExitFailure : kExitOk;
}

// ----------------------------------------------------------------- query

struct QueryArgs {
  std::string config;
  std::string index;
  std::string llm;
  std::string script;
  std::string llm_url;
  std::string model;
  std::optional<std::size_t> k;
  std::optional<double> min_score;
  std::vector<std::string> exclude;
  std::string format = "json";
  std::string question;
};

void print_text(const chain::AnswerEnvelope& env, std::ostream& out) {
  out << env.answer << "\n";
  if (!env.references.empty()) {
    out << "\nReferences:\n";
    for (std::size_t i = 0; i < env.references.size(); ++i) {
      const auto& r = env.references[i];
      out << "  [" << i + 1 << "] " << r.source_title;
      if (r.spec_label) out << " (" << *r.spec_label << ")";
      out << "  " << r.doc_id << "\n";
    }
  }
  out << "\nverdict: " << to_string(env.verdict) << "\n";
}

int cmd_query(const QueryArgs& a, std::ostream& out) {
  ServiceConfig cfg = base_config(a.config);
  if (!a.index.empty()) cfg.index_dir = a.index;
  if (!a.llm.empty()) {
    if (a.llm == "scripted") {
      cfg.llm.kind = llm::LlmKind::kScripted;
    } else if (a.llm == "remote") {
      cfg.llm.kind = llm::LlmKind::kRemote;
    } else {
      throw UsageError("--llm must be scripted or remote");
    }
  }
  if (!a.script.empty()) {
    try {
      cfg.llm.script = llm::read_script(a.script);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (!a.llm_url.empty()) cfg.llm.base_url = a.llm_url;
  if (!a.model.empty()) cfg.llm.model_name = a.model;
  if (a.k) cfg.retrieval.k = *a.k;
  if (a.min_score) cfg.retrieval.min_score = *a.min_score;
  for (const auto& id : a.exclude) cfg.retrieval.excluded_doc_ids.insert(id);
  cfg.retrieval.validate();
  cfg.llm.validate();

  const auto kb = open_index(cfg.index_dir);
  std::shared_ptr<const embed::Embedder> embedder = embed::make_embedder(cfg.embedder.value_or(kb->embedder_config()));
  std::shared_ptr<const llm::ChatModel> chat = llm::make_chat_model(cfg.llm);

  chain::ChainConfig chain_cfg;
  chain_cfg.retrieval = cfg.retrieval;
  chain_cfg.persona = cfg.persona;
  chain_cfg.verify = cfg.verify;
  chain_cfg.history_window = cfg.history_window;
  const chain::QaChain qa(kb, embedder, chat, chat, chain_cfg);

  history::SessionStore sessions;
  const std::string sid = sessions.create_session().session_id;
  const chain::AnswerEnvelope env = qa.answer(sessions, sid, a.question);

  if (a.format == "text") {
    print_text(env, out);
  } else {
    out << nlohmann::json(env).dump(2) << "\n";
  }
  return kExitOk;
}

// ----------------------------------------------------------------- serve

struct ServeArgs {
  std::string config;
  std::string addr;
  std::string index;
  std::string state_dir;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  ServiceConfig cfg = base_config(a.config);
  if (!a.addr.empty()) cfg.addr = a.addr;
  if (!a.index.empty()) cfg.index_dir = a.index;
  if (!a.state_dir.empty()) cfg.state_dir = a.state_dir;
  const auto [host, port] = split_addr(cfg.addr);

  service::Api api(cfg);
  if (api.index_info().status != 200) err << "warning: no index mounted from '" << cfg.index_dir.string() << "'\n";
  service::HttpServer server(api);
  const int bound = server.bind(host, port);
  if (bound < 0) throw UsageError("cannot bind " + cfg.addr);
  out << "listening on " << host << ":" << bound << std::endl;

  // Stop cleanly on SIGINT/SIGTERM: block them here and wait in a helper thread.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &sigs, &previous);
  std::atomic<bool> signalled{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&sigs, &sig);
    signalled = true;
    server.stop();
  });

  const bool ok = server.listen_after_bind();
  if (!signalled.exchange(true)) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  return ok ? kExitOk : kExitFailure;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string config;
  std::string index;
  std::string qrels;
  std::size_t k = vindex::kDefaultTopK;
  std::string report;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  ServiceConfig cfg = base_config(a.config);
  if (!a.index.empty()) cfg.index_dir = a.index;
  if (a.k == 0) throw UsageError("--k must be positive");

  std::ifstream in(a.qrels);
  if (!in) throw UsageError("cannot read qrels file " + a.qrels);
  std::vector<eval::Qrel> qrels;
  try {
    qrels = eval::parse_qrels(in);
  } catch (const eval::QrelsError& e) {
    throw UsageError(a.qrels + ": " + e.what());
  }

  const auto kb = open_index(cfg.index_dir);
  const auto embedder = embed::make_embedder(cfg.embedder.value_or(kb->embedder_config()));
  const eval::EvalReport report = eval::evaluate(qrels, *kb, *embedder, a.k);

  out << std::fixed << std::setprecision(4) << "queries=" << report.per_query.size() << " recall@" << report.k << "="
      << report.recall << " mrr=" << report.mrr << "\n";
  out.unsetf(std::ios::floatfield);
  if (!a.report.empty()) {
    std::ofstream rep(a.report);
    if (!rep) throw IoError("cannot write report " + a.report);
    rep << nlohmann::json(report).dump(2) << "\n";
    out << "report written to " << a.report << "\n";
  }
  return kExitOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const EmptyResponse& e) {
    err << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidParams& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NoTokens& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RootNotFound& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval-augmented question answering over standards documents", "telecomrag"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "telecomrag 0.1.0");

  IngestArgs ingest;
  auto* ing = app.add_subcommand("ingest", "Chunk, embed and index a corpus directory");
  ing->add_option("--config", ingest.config, "Service config JSON")->check(CLI::ExistingFile);
  ing->add_option("--corpus", ingest.corpus, "Corpus root directory")->required();
  ing->add_option("--out", ingest.out, "Output index directory")->required();
  ing->add_option("--embedder", ingest.embedder, "hash or remote")->check(CLI::IsMember({"hash", "remote"}));
  ing->add_option("--dim", ingest.dim, "Hash embedder dimension");
  ing->add_option("--embed-url", ingest.embed_url, "Remote embeddings base URL");
  ing->add_option("--embed-model", ingest.embed_model, "Remote embeddings model");
  ing->add_option("--chunk-size", ingest.chunk_size, "Chunk size in characters (default 4000)");
  ing->add_option("--overlap", ingest.overlap, "Chunk overlap in characters (default 100)");
  ing->add_flag("--no-snap", ingest.no_snap, "Cut chunks at exact character offsets");
  ing->add_flag("--strict", ingest.strict, "Fail when any file is skipped");
  ing->add_option("--ext", ingest.extensions, "File extensions to ingest (default .txt .md)");

  QueryArgs query;
  auto* qry = app.add_subcommand("query", "Answer one question against an index");
  qry->add_option("--config", query.config, "Service config JSON")->check(CLI::ExistingFile);
  qry->add_option("--index", query.index, "Index directory");
  qry->add_option("--llm", query.llm, "scripted or remote")->check(CLI::IsMember({"scripted", "remote"}));
  qry->add_option("--script", query.script, "Script file for the scripted model")->check(CLI::ExistingFile);
  qry->add_option("--llm-url", query.llm_url, "Chat completions base URL");
  qry->add_option("--model", query.model, "Chat model name");
  qry->add_option("--k", query.k, "Number of chunks to retrieve (default 4)");
  qry->add_option("--min-score", query.min_score, "Minimum cosine similarity (default 0.15)");
  qry->add_option("--exclude", query.exclude, "Document id to leave out (repeatable)");
  qry->add_option("--format", query.format, "json or text")->check(CLI::IsMember({"json", "text"}));
  qry->add_option("question", query.question, "The question")->required();

  ServeArgs serve;
  auto* srv = app.add_subcommand("serve", "Run the HTTP API");
  srv->add_option("--config", serve.config, "Service config JSON")->check(CLI::ExistingFile);
  srv->add_option("--addr", serve.addr, "host:port to listen on");
  srv->add_option("--index", serve.index, "Index directory");
  srv->add_option("--state-dir", serve.state_dir, "Directory for persisted sessions");

  EvalArgs ev;
  auto* evl = app.add_subcommand("eval", "Measure retrieval recall@k and MRR over a qrels file");
  evl->add_option("--config", ev.config, "Service config JSON")->check(CLI::ExistingFile);
  evl->add_option("--index", ev.index, "Index directory");
  evl->add_option("--qrels", ev.qrels, "TSV of query<TAB>expected_doc_id")->required();
  evl->add_option("--k", ev.k, "Cutoff rank")->capture_default_str();
  evl->add_option("--report", ev.report, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return kExitUsage;
  }

  if (ing->parsed()) return guarded([&] { return cmd_ingest(ingest, out, err); }, err);
  if (qry->parsed()) return guarded([&] { return cmd_query(query, out); }, err);
  if (srv->parsed()) return guarded([&] { return cmd_serve(serve, out, err); }, err);
  return guarded([&] { return cmd_eval(ev, out); }, err);
}

}  // namespace telecomrag::cli

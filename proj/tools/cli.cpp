// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "ites/bundle.hpp"
#include "ites/http_api.hpp"
#include "ites/recognition.hpp"
#include "ites/session.hpp"
#include "ites/synthgen.hpp"
#include "ites/text.hpp"

namespace fs = std::filesystem;

namespace ites::cli {
namespace {

constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::unique_ptr<transcription::TranscriptionBackend> make_backend(const std::string& url,
                                                                  std::shared_ptr<const bundle::DemoBundle> b) {
  if (!url.empty()) return transcription::make_http_backend(url, std::move(b));
  return session::default_backend(*b);
}

void print_segments(std::ostream& out, const session::Session& s) {
  out << "phase " << session::to_string(s.phase()) << '\n';
  for (std::size_t i = 0; i < s.segments().size(); ++i) {
    const auto& seg = s.segments()[i];
    out << i << '\t' << seg.segment.start << '\t' << seg.segment.end << '\t'
        << (seg.segment.active() ? "active" : "ignored");
    if (seg.segment.transcript) out << '\t' << taskmodel::quote(*seg.segment.transcript);
    if (seg.transcription_error) out << "\t(transcription failed: " << *seg.transcription_error << ')';
    out << '\n';
  }
}

session::Record edit_from_args(const std::string& op, const std::vector<std::string>& args) {
  return session::Record{"-", op, args};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interactive task encoding from stop-and-go demonstrations", "ites"};
  app.require_subcommand(1);

  // segment
  std::string bundle_dir, diagnostics_out;
  auto* segment = app.add_subcommand("segment", "Detect stops in a bundle and print the segment table");
  segment->add_option("bundle", bundle_dir, "Bundle directory")->required();
  segment->add_option("--diagnostics", diagnostics_out, "Write the signal-chain CSV here");

  // train
  std::string corpus_path, model_out;
  double alpha = 1.0;
  int folds = 0;
  std::uint64_t cv_seed = 0;
  auto* train = app.add_subcommand("train", "Train the task classifier on a label,sentence CSV");
  train->add_option("corpus", corpus_path, "Corpus CSV")->required();
  train->add_option("model", model_out, "Output model file")->required();
  train->add_option("--alpha", alpha, "Additive smoothing")->check(CLI::PositiveNumber);
  train->add_option("--cv", folds, "Also report k-fold stratified cross-validation")->check(CLI::Range(2, 1000));
  train->add_option("--cv-seed", cv_seed, "Fold assignment seed");

  // recognize
  std::string model_path, sentence;
  auto* recognize = app.add_subcommand("recognize", "Classify one instruction");
  recognize->add_option("model", model_path, "Model file written by train")->required();
  recognize->add_option("text", sentence, "Instruction text")->required();

  // sessions
  std::string session_dir, transcriber;
  auto* create = app.add_subcommand("new", "Create a session directory from a bundle");
  create->add_option("bundle", bundle_dir, "Bundle directory")->required();
  create->add_option("session", session_dir, "New session directory")->required();

  std::string edit_op, edit_script;
  std::vector<std::string> edit_args;
  auto* edit = app.add_subcommand("edit", "Apply review edits to a session directory");
  edit->add_option("session", session_dir, "Session directory")->required();
  edit->add_option("op", edit_op, "merge | ignore | confirm_segments | set_transcript | confirm_transcripts | "
                                  "compile | revert | reopen_transcripts");
  edit->add_option("args", edit_args, "Edit arguments");
  edit->add_option("--script", edit_script, "File with one edit per line");
  edit->add_option("--transcriber", transcriber, "External speech service URL");

  auto* show = app.add_subcommand("show", "Print a session's state");
  show->add_option("session", session_dir, "Session directory")->required();

  auto* compile = app.add_subcommand("compile", "Compile a session whose transcripts are confirmed");
  compile->add_option("session", session_dir, "Session directory")->required();

  std::string audit_path;
  bool print_state = false;
  auto* replay = app.add_subcommand("replay", "Replay an audit log and print the resulting task model");
  replay->add_option("log", audit_path, "Audit log")->required();
  replay->add_flag("--state", print_state, "Print the full session state instead");

  // serve
  int port = 8080;
  std::string data_dir, host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Run the HTTP review service");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--data", data_dir, "Session data directory (default $ITES_DATA_DIR, then ./ites-data)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--transcriber", transcriber, "External speech service URL");

  // synth
  std::string scenario, synth_out;
  std::uint64_t synth_seed = 0;
  int pauses = 3;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic demonstration bundle");
  synth->add_option("scenario", scenario,
                    "pick_bring_place | throw_away | open_door | shelf_multibring | stopgo")
      ->required();
  synth->add_option("out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--pauses", pauses, "Pause count for stopgo")->check(CLI::Range(1, 20));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (*segment) {
      auto b = bundle::load(bundle_dir);
      auto diag = segmentation::run_chain(bundle::raw_signal(*b), b->manifest.segmentation);
      auto segs = segmentation::slice_segments(diag.stops, b->frame_count());
      out << "index\tstart\tend\tseconds\n";
      for (std::size_t i = 0; i < segs.size(); ++i)
        out << i << '\t' << segs[i].start << '\t' << segs[i].end << '\t'
            << fmt("%.3f", (segs[i].end - segs[i].start) / b->manifest.video_rate) << '\n';
      if (!diagnostics_out.empty()) text::write_file(diagnostics_out, segmentation::diagnostics_csv(diag));
      return 0;
    }
    if (*train) {
      const auto corpus = recognition::parse_corpus_csv(text::read_file(corpus_path));
      const auto model = recognition::NaiveBayesClassifier::train(corpus, alpha);
      text::write_file(model_out, model.dump());
      out << "trained on " << corpus.size() << " sentences, " << model.classes().size() << " classes, "
          << model.vocabulary_size() << " tokens\n";
      if (folds > 0) {
        const auto cv = recognition::cross_validate(corpus, folds, cv_seed, alpha);
        out << folds << "-fold accuracy " << fmt("%.4f", cv.mean_accuracy) << '\n';
      }
      return 0;
    }
    if (*recognize) {
      const auto model = recognition::NaiveBayesClassifier::load(text::read_file(model_path));
      const auto p = model.predict(sentence);
      out << taskmodel::code(p.label) << '\t' << taskmodel::display_name(p.label) << '\n';
      auto scores = p.scores;
      std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      for (const auto& [label, score] : scores) out << "  " << taskmodel::code(label) << '\t' << fmt("%.6f", score) << '\n';
      return 0;
    }
    if (*create) {
      auto s = session::Session::create_in(session_dir, bundle_dir);
      print_segments(out, *s);
      return 0;
    }
    if (*edit) {
      if (edit_op.empty() == edit_script.empty()) {
        err << "edit: give either an op or --script\n";
        return kUsageError;
      }
      auto s = session::Session::open(session_dir);
      auto backend = make_backend(transcriber, s->bundle_ptr());
      std::vector<session::Record> edits;
      if (!edit_script.empty()) {
        const auto script = text::read_file(edit_script);
        for (auto line : text::split_lines(script)) {
          line = text::trim(line);
          if (line.empty() || line.front() == '#') continue;
          edits.push_back(session::parse_edit(line));
        }
      } else {
        edits.push_back(edit_from_args(edit_op, edit_args));
      }
      for (const auto& e : edits) session::apply_edit(*s, e, *backend);
      print_segments(out, *s);
      return 0;
    }
    if (*show) {
      out << session::Session::open(session_dir)->state_text();
      return 0;
    }
    if (*compile) {
      auto s = session::Session::open(session_dir);
      s->compile();
      for (const auto& w : s->warnings()) err << "warning: " << w << '\n';
      out << (fs::path(session_dir) / session::kTaskModelFile).string() << '\n';
      return 0;
    }
    if (*replay) {
      auto s = session::Session::replay(text::read_file(audit_path));
      if (print_state)
        out << s->state_text();
      else if (s->model())
        out << taskmodel::serialize(*s->model());
      else
        throw conflict("log does not end in a compiled session",
                       {{"phase", std::string(session::to_string(s->phase()))}});
      return 0;
    }
    if (*serve) {
      if (data_dir.empty()) {
        const char* env = std::getenv("ITES_DATA_DIR");
        data_dir = env && *env ? env : "ites-data";
      }
      session::SessionStore store(data_dir);
      if (!transcriber.empty())
        store.set_backend_factory([transcriber](std::shared_ptr<const bundle::DemoBundle> b) {
          return transcription::make_http_backend(transcriber, std::move(b));
        });
      static http::Service* running = nullptr;
      http::Service service(store);
      const int bound = service.bind(host, port);
      if (bound < 0) throw failed_dependency("cannot bind " + host + ":" + std::to_string(port));
      running = &service;
      std::signal(SIGINT, [](int) { if (running) running->stop(); });
      std::signal(SIGTERM, [](int) { if (running) running->stop(); });
      out << "listening on http://" << host << ':' << bound << " (data " << fs::absolute(data_dir).string() << ")"
          << std::endl;
      service.listen_after_bind();
      running = nullptr;
      return 0;
    }
    if (*synth) {
      if (scenario == "stopgo") {
        Rng rng(synth_seed);
        auto script = synthgen::random_script(rng, pauses, 1.0, 2.0);
        synthgen::StopGoOptions o;
        o.seed = synth_seed;
        auto video = synthgen::gen_stopgo(script, o);
        synthgen::write_stopgo(video, synth_out, "stopgo-" + std::to_string(synth_seed));
        out << synth_out << ": " << video.frames.size() << " frames, " << video.truth.size() << " pauses\n";
        return 0;
      }
      auto truth = synthgen::gen_scenario(synthgen::scenario_from(scenario), synth_out, synth_seed);
      out << synth_out << ": " << truth.frame_count << " frames, " << truth.stops.size() << " pauses, expected";
      for (auto l : truth.expected) out << ' ' << taskmodel::code(l);
      out << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what();
    for (const auto& [k, v] : e.detail()) err << " [" << k << '=' << v << ']';
    err << '\n';
    return kDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kUsageError;
}

}  // namespace ites::cli

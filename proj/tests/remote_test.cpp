#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "dprag/cli/commands.hpp"
#include "dprag/error.hpp"
#include "dprag/http_embedder.hpp"
#include "dprag/http_lm.hpp"
#include "dprag/lm.hpp"

namespace dprag {
namespace {

using nlohmann::json;

// Fake embedding and logits server on an ephemeral local port.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls;
      if (fail_embed_first > 0) {
        --fail_embed_first;
        res.status = 503;
        return;
      }
      if (embed_status != 200) {
        res.status = embed_status;
        return;
      }
      const auto body = json::parse(req.body);
      json rows = json::array();
      for (const auto& t : body.at("texts")) {
        std::vector<double> v(embed_dim, 1.0);
        for (unsigned char c : t.get<std::string>()) v[c % embed_dim] += 1.0;
        rows.push_back(v);
      }
      res.set_content(json{{"embeddings", rows}}.dump(), "application/json");
    });
    server_.Get("/vocab", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"tokens", vocab}}.dump(), "application/json");
    });
    server_.Post("/next_token_logprobs",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   ++lm_calls;
                   {
                     std::lock_guard lock(mu_);
                     last_request = json::parse(req.body);
                   }
                   json lp = json::array();
                   const std::size_t v = vocab.size() + extra_entries;
                   // EOS gets zero mass, "x" half, the rest share the other half.
                   for (std::size_t i = 0; i < v; ++i) {
                     if (i == 0) {
                       lp.push_back(nullptr);
                     } else if (i < vocab.size() && vocab[i] == "x") {
                       lp.push_back(std::log(0.5));
                     } else {
                       lp.push_back(std::log(0.5 / static_cast<double>(v - 2)));
                     }
                   }
                   res.set_content(json{{"log_probs", lp}}.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  HttpEndpoint endpoint() const { return {url(), std::chrono::milliseconds(5000)}; }
  json request() {
    std::lock_guard lock(mu_);
    return last_request;
  }

  std::vector<std::string> vocab = [] {
    std::vector<std::string> v = {"</s>", " ", ":", "\n", "?", "ab"};
    for (char c = 'a'; c <= 'z'; ++c) v.emplace_back(1, c);
    for (char c = 'A'; c <= 'Z'; ++c) v.emplace_back(1, c);
    return v;
  }();
  std::atomic<int> embed_calls{0};
  std::atomic<int> lm_calls{0};
  std::atomic<int> fail_embed_first{0};
  std::atomic<int> embed_status{200};
  std::atomic<std::size_t> embed_dim{8};
  std::atomic<std::size_t> extra_entries{0};

 private:
  httplib::Server server_;
  std::thread thread_;
  std::mutex mu_;
  json last_request;
  int port_ = 0;
};

const RetryPolicy kFastRetry{3, std::chrono::milliseconds(1)};

TEST(HttpEmbedder, EmbedsInOrder) {
  FakeServer s;
  const HttpEmbeddingProvider p(s.endpoint(), kFastRetry);
  const std::vector<std::string> texts = {"aaa", "bbb"};
  const auto e = p.embed(texts);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].dim(), 8u);
  EXPECT_EQ(p.dim(), 8u);
  EXPECT_EQ(e[0].vector()['a' % 8], 4.0);
  EXPECT_EQ(e[1].vector()['b' % 8], 4.0);
}

TEST(HttpEmbedder, RetriesTransientFailures) {
  FakeServer s;
  s.fail_embed_first = 2;
  const HttpEmbeddingProvider p(s.endpoint(), kFastRetry);
  const std::vector<std::string> texts = {"x"};
  EXPECT_EQ(p.embed(texts).size(), 1u);
  EXPECT_EQ(s.embed_calls.load(), 3);
}

TEST(HttpEmbedder, GivesUpAfterRetries) {
  FakeServer s;
  s.fail_embed_first = 100;
  const HttpEmbeddingProvider p(s.endpoint(), kFastRetry);
  const std::vector<std::string> texts = {"x"};
  try {
    p.embed(texts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
  EXPECT_EQ(s.embed_calls.load(), 4);
}

TEST(HttpEmbedder, ClientErrorsAreNotRetried) {
  FakeServer s;
  s.embed_status = 400;
  const HttpEmbeddingProvider p(s.endpoint(), kFastRetry);
  const std::vector<std::string> texts = {"x"};
  EXPECT_THROW(p.embed(texts), Error);
  EXPECT_EQ(s.embed_calls.load(), 1);
}

TEST(HttpEmbedder, DimensionChangeIsAnError) {
  FakeServer s;
  const HttpEmbeddingProvider p(s.endpoint(), kFastRetry);
  const std::vector<std::string> texts = {"x"};
  p.embed(texts);
  s.embed_dim = 16;
  try {
    p.embed(texts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(HttpEmbedder, UnreachableServer) {
  const HttpEmbeddingProvider p({"http://127.0.0.1:1", std::chrono::milliseconds(500)},
                                {1, std::chrono::milliseconds(1)});
  const std::vector<std::string> texts = {"x"};
  try {
    p.embed(texts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
}

TEST(HttpLm, VocabularyTokenizerAndLogProbs) {
  FakeServer s;
  HttpLanguageModel::Options o;
  o.retry = kFastRetry;
  const HttpLanguageModel lm(s.endpoint(), o);
  EXPECT_EQ(lm.vocabulary().size(), s.vocab.size());
  EXPECT_EQ(lm.vocabulary().eos(), Token{0});
  const auto t = lm.tokenize("ab a~");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(lm.vocabulary().text(t[0]), "ab");
  EXPECT_EQ(lm.detokenize(t), "ab a");

  const auto d = next_token_distribution(lm, t);
  EXPECT_EQ(d.log_probs[0], -INFINITY);
  EXPECT_NEAR(d.probability(*lm.vocabulary().find("x")), 0.5, 1e-12);
  const auto req = s.request();
  ASSERT_TRUE(req.contains("tokens"));
  EXPECT_EQ(req.at("tokens").size(), 3u);
  EXPECT_EQ(req.at("tokens")[0].get<std::uint32_t>(), t[0].id);
}

TEST(HttpLm, TextMode) {
  FakeServer s;
  HttpLanguageModel::Options o;
  o.retry = kFastRetry;
  o.mode = HttpLanguageModel::RequestMode::kText;
  const HttpLanguageModel lm(s.endpoint(), o);
  next_token_distribution(lm, lm.tokenize("Question: ab?"));
  EXPECT_EQ(s.request().at("text"), "Question: ab?");
}

TEST(HttpLm, WrongLengthIsVocabMismatch) {
  FakeServer s;
  s.extra_entries = 1;
  HttpLanguageModel::Options o;
  o.retry = kFastRetry;
  const HttpLanguageModel lm(s.endpoint(), o);
  try {
    next_token_distribution(lm, lm.tokenize("ab"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVocabMismatch);
  }
}

TEST(HttpLm, UnreachableServer) {
  HttpLanguageModel::Options o;
  o.retry = {1, std::chrono::milliseconds(1)};
  try {
    HttpLanguageModel lm({"http://127.0.0.1:1", std::chrono::milliseconds(500)}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
}

TEST(ServeCheck, ReportsBothBackends) {
  FakeServer s;
  cli::CliEnvironment env{s.url(), s.url()};
  std::ostringstream out, err;
  EXPECT_EQ(cli::run_cli({"dprag", "serve-check"}, out, err, env), cli::kExitOk);
  EXPECT_NE(out.str().find("embed: ok"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("lm: ok"), std::string::npos) << out.str();

  std::ostringstream toy;
  EXPECT_EQ(cli::run_cli({"dprag", "serve-check"}, toy, err, {}), cli::kExitOk);
  EXPECT_NE(toy.str().find("lm: toy"), std::string::npos);

  std::ostringstream bad;
  cli::CliEnvironment down{std::string("http://127.0.0.1:1"), std::nullopt};
  EXPECT_EQ(cli::run_cli({"dprag", "serve-check", "--timeout-ms", "500"}, bad, err, down),
            cli::kExitFailure);
  EXPECT_NE(bad.str().find("lm: FAIL"), std::string::npos);
}

TEST(RemoteQuery, EndToEndOverHttp) {
  FakeServer s;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dprag_remote_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  {
    std::ofstream c(dir / "corpus.ndjson");
    for (int i = 0; i < 5; ++i) {
      c << json{{"doc_id", "d" + std::to_string(i)},
                {"privacy_unit", "u" + std::to_string(i)},
                {"text", "record " + std::to_string(i)}}
               .dump()
        << '\n';
    }
  }
  cli::CliEnvironment env{s.url(), s.url()};
  std::ostringstream out, err;
  ASSERT_EQ(cli::run_cli({"dprag", "ingest", "--corpus", (dir / "corpus.ndjson").string(),
                          "--index", (dir / "idx").string()},
                         out, err, env),
            cli::kExitOk)
      << err.str();
  std::ostringstream q;
  ASSERT_EQ(cli::run_cli({"dprag", "query", "--index", (dir / "idx").string(), "--question",
                          "what is it?", "--seed", "3", "--max-tokens", "3", "--top-k", "2"},
                         q, err, env),
            cli::kExitOk)
      << err.str();
  EXPECT_NE(q.str().find("stop_reason: max_tokens"), std::string::npos) << q.str();
  EXPECT_GT(s.lm_calls.load(), 0);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dprag

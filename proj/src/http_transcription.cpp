// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include <algorithm>

#include "ites/error.hpp"
#include "ites/text.hpp"
#include "ites/transcription.hpp"

namespace ites::transcription {
namespace {

class HttpTranscription final : public TranscriptionBackend {
 public:
  HttpTranscription(std::string origin, std::string path, std::shared_ptr<const bundle::DemoBundle> bundle)
      : origin_(std::move(origin)), path_(std::move(path)), bundle_(std::move(bundle)) {}

  std::string transcribe(const segmentation::SampleRange& range) override {
    const auto& samples = bundle_->audio->samples;
    const auto n = static_cast<std::int64_t>(samples.size());
    const auto b = std::clamp<std::int64_t>(range.begin, 0, n), e = std::clamp<std::int64_t>(range.end, b, n);
    std::string body;
    body.reserve(static_cast<std::size_t>(e - b) * 2);
    for (auto i = b; i < e; ++i) {
      const auto v = static_cast<std::uint16_t>(samples[static_cast<std::size_t>(i)]);
      body += static_cast<char>(v & 0xff);
      body += static_cast<char>(v >> 8);
    }
    httplib::Client client(origin_);
    client.set_read_timeout(60);
    httplib::Headers headers{{"X-Sample-Rate", std::to_string(static_cast<long>(bundle_->audio->sample_rate))}};
    auto res = client.Post(path_, headers, body, "application/octet-stream");
    if (!res) throw failed_dependency("transcription service unreachable", {{"url", origin_ + path_}});
    if (res->status != 200)
      throw failed_dependency("transcription service returned " + std::to_string(res->status),
                              {{"url", origin_ + path_}});
    return std::string(text::trim(res->body));
  }

 private:
  std::string origin_;
  std::string path_;
  std::shared_ptr<const bundle::DemoBundle> bundle_;
};

}  // namespace

std::unique_ptr<TranscriptionBackend> make_http_backend(std::string url,
                                                        std::shared_ptr<const bundle::DemoBundle> bundle) {
  if (!bundle || !bundle->audio) throw failed_dependency("bundle has no audio");
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0)
    throw bad_request("transcription URL must be http://host[:port]/path", {{"url", url}});
  const auto slash = url.find('/', scheme + 3);
  std::string origin = slash == std::string::npos ? url : url.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : url.substr(slash);
  return std::make_unique<HttpTranscription>(std::move(origin), std::move(path), std::move(bundle));
}

}  // namespace ites::transcription

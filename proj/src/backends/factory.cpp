#include "ol/backends/factory.hpp"

#include "ol/backends/remote.hpp"
#include "ol/common/error.hpp"

namespace ol::backends {

namespace {

std::shared_ptr<RemoteClient> client_for(const BackendDescriptor& d) {
  return std::make_shared<RemoteClient>(d, remote_response_schema(d.role));
}

void no_wizard(const BackendDescriptor& d) {
  if (d.implementation == Implementation::Wizard) {
    throw ConfigError({"backends." + d.role + ".implementation"}, d.role + " has no wizard implementation");
  }
}

}  // namespace

BackendSet make_backends(const RuntimeConfig& cfg, const WizardData& wizard) {
  BackendSet s;
  switch (cfg.asr.implementation) {
    case Implementation::Reference: s.asr = std::make_shared<WizardAsr>(); break;
    case Implementation::Wizard: s.asr = std::make_shared<WizardAsr>(wizard.segments); break;
    case Implementation::Remote: s.asr = std::make_shared<RemoteAsr>(client_for(cfg.asr)); break;
  }
  switch (cfg.reasoner.implementation) {
    case Implementation::Reference: s.reasoner = std::make_shared<ReferenceReasoner>(); break;
    case Implementation::Wizard: s.reasoner = std::make_shared<WizardReasoner>(wizard.answers); break;
    case Implementation::Remote: s.reasoner = std::make_shared<RemoteReasoner>(client_for(cfg.reasoner)); break;
  }
  no_wizard(cfg.frame_encoder);
  no_wizard(cfg.compressor);
  no_wizard(cfg.tts_backend);
  no_wizard(cfg.gate);
  if (cfg.frame_encoder.implementation == Implementation::Remote) {
    s.frame_encoder = std::make_shared<RemoteFrameEncoder>(client_for(cfg.frame_encoder));
  } else {
    s.frame_encoder = std::make_shared<ReferenceFrameEncoder>();
  }
  if (cfg.compressor.implementation == Implementation::Remote) {
    s.compressor = std::make_shared<RemoteCompressor>(client_for(cfg.compressor));
  } else {
    s.compressor = std::make_shared<ReferenceCompressor>();
  }
  if (cfg.tts_backend.implementation == Implementation::Remote) {
    s.tts = std::make_shared<RemoteTts>(client_for(cfg.tts_backend));
  } else {
    s.tts = std::make_shared<ReferenceTts>(cfg.tts.ms_per_char);
  }
  if (cfg.gate.implementation == Implementation::Remote) {
    s.gate = std::make_shared<RemoteGate>(client_for(cfg.gate));
  } else {
    s.gate = std::make_shared<ReferenceGate>(cfg.reasoning.filler_lexicon, cfg.reasoning.min_content_tokens);
  }
  return s;
}

}  // namespace ol::backends

//! Adversarial compositions over private generators, a shared generator, a domain
//! discriminator and a cut classifier.
//!
//! Both modes share one forward pass and one set of losses; they differ in the
//! generator objective. FARADAy trains the generators to fool the discriminator
//! (`L_g` uses the complemented domain labels). DIRAC feeds the discriminator's own
//! loss back into the generators (`L_g = L_d`) and keeps each private generator
//! responsible for its own domain's classification loss only.

mod baselines;
mod net;
mod routing;

pub use baselines::{build_probe, build_vanilla, probe_architecture, vanilla_architecture};
pub use net::{
    forward_generators, forward_heads, forward_pair, AdaMode, AdversarialArch, AdversarialNet,
    ForwardCapture, GeneratorPass, Part,
};
pub use routing::{
    dirac_losses, discriminator_update, faraday_losses, route_gradients, AdversarialGrads, AdversarialLosses,
    LossWeights, PairLabels, SOURCE_DOMAIN_CLASS, TARGET_DOMAIN_CLASS,
};

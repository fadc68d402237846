"""radioae: modulated-IQ dataset synthesis and a from-scratch
convolutional denoising autoencoder with a binary bottleneck.

Subpackages/modules:
    dsp       modulators, pulse shaping, channel impairments
    dataset   example generation and the RAED v1 file format
    layers    differentiable kernels with exact gradients
    adam      the optimizer
    model     the autoencoder, loss, RAEM v1 checkpoints
    training  train loop, metrics, CSV exports
    cli       the radioae command
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]

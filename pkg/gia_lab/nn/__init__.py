"""Layers, the residual model family, loss and gradient extraction."""
from .batchnorm import (BNForwardCache, BNState, BNTrace, batch_statistics, batchnorm_forward,
                        batchnorm_layer, bn_input_grad_inference, bn_input_grad_training,
                        update_running_stats)
from .model import BlockSpec, Model, ModelParams, basic_block_forward, build_model, residual_block
from .loss import cross_entropy, one_hot, softmax_cross_entropy
from .gradients import GradientProgram, build_gradient_program, loss_and_gradients
from .training import advance_running_stats, sgd_pretrain

__all__ = [
    'BNForwardCache', 'BNState', 'BNTrace', 'batch_statistics', 'batchnorm_forward', 'batchnorm_layer',
    'bn_input_grad_inference', 'bn_input_grad_training', 'update_running_stats',
    'BlockSpec', 'Model', 'ModelParams', 'basic_block_forward', 'build_model', 'residual_block',
    'cross_entropy', 'one_hot', 'softmax_cross_entropy',
    'GradientProgram', 'build_gradient_program', 'loss_and_gradients',
    'advance_running_stats', 'sgd_pretrain',
]

"""Federated training: client and server state, round functions and the training loop."""

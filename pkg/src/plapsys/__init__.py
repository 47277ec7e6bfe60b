"""Coupled p-Laplacian system solver."""

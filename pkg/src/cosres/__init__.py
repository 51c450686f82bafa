"""Co-inductive structural resolution over rational terms."""

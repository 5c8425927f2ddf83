"""Type-in-type with a type-equality type: checking, star translation, stratification and a finite set model."""

export * from './types.js';
export * from './state.js';
export * from './layout.js';
export * from './colors.js';
export * from './render.js';
export * from './views.js';
export * from './api.js';
export * from './app.js';
